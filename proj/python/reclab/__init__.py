from _reclab import (
    ColdStartError,
    CandidateSet,
    DataError,
    Dataset,
    Fold,
    Model,
    build_candidates,
    crossfold_users,
    generate_preferences,
    gini_index,
    metric,
    ranking_metric_names,
    run_bias_experiment,
    train,
)

__all__ = [
    "ColdStartError",
    "CandidateSet",
    "DataError",
    "Dataset",
    "Fold",
    "Model",
    "build_candidates",
    "crossfold_users",
    "generate_preferences",
    "gini_index",
    "metric",
    "ranking_metric_names",
    "run_bias_experiment",
    "train",
]
