import math

import pytest

import reclab


@pytest.fixture()
def ratings():
    rows = []
    for u in range(15):
        for i in range(25):
            if (u * 7 + i * 3) % 4 != 0:
                rows.append((f"u{u}", f"i{i}", float((u + i) % 5 + 1)))
    return reclab.Dataset.from_tuples(rows)


def test_dataset_summary(ratings):
    s = ratings.summary("demo")
    assert s["n_users"] == 15
    assert s["n_items"] == 25
    assert s["n_ratings"] == len(ratings)
    assert 0.0 <= s["gini"] <= 1.0
    assert s["density"] == pytest.approx(len(ratings) / (15 * 25))


def test_gini_index():
    assert reclab.gini_index([5.0, 5.0, 5.0, 5.0]) == pytest.approx(0.0)
    assert reclab.gini_index([0.0, 0.0, 0.0, 10.0]) == pytest.approx(0.75)
    with pytest.raises(reclab.DataError):
        reclab.gini_index([1.0])


def test_split_candidates_and_recommend(ratings):
    folds = reclab.crossfold_users(ratings, n_folds=2, test_fraction=0.25,
                                   min_ratings=4, seed=7)
    assert len(folds) == 2
    fold = folds[0]
    assert fold.test_users
    user = fold.test_users[0]

    full = reclab.build_candidates(fold, user, kind="full")
    sampled = reclab.build_candidates(fold, user, kind="uniform", n_decoys=5, seed=3)
    assert set(sampled.decoys) <= set(full.decoys)
    assert sampled.test_items == full.test_items

    model = reclab.train(fold.train, "popular")
    recs = model.recommend(fold.train, user, full, n=10)
    assert len(recs) == min(10, len(full))
    scores = [s for _, s in recs]
    assert scores == sorted(scores, reverse=True)

    knn = reclab.train(fold.train, "item-knn", mode="explicit", neighbors=10)
    assert len(knn.recommend(fold.train, user, sampled, n=5)) == min(5, len(sampled))


def test_metric_values():
    assert reclab.metric("ndcg", [1, 2, 3], [1, 2, 3], k=3) == pytest.approx(1.0)
    assert reclab.metric("ndcg", [9, 5, 7], [5], k=10) == pytest.approx(1.0 / math.log2(3))
    assert reclab.metric("precision", [1, 9, 2], [1, 2], k=3) == pytest.approx(2 / 3)
    assert reclab.metric("recip_rank", [9, 8, 3], [3], k=10) == pytest.approx(1 / 3)
    assert set(reclab.ranking_metric_names()) >= {"ndcg", "precision", "recall"}


def test_generate_preferences_deterministic():
    a = reclab.generate_preferences(n_users=50, n_items=40, n_features=3,
                                    lam=8.0, seed=11)
    b = reclab.generate_preferences(n_users=50, n_items=40, n_features=3,
                                    lam=8.0, seed=11)
    assert a == b
    assert len(a) == 50
    assert all(len(set(liked)) == len(liked) for liked in a)


def test_bias_experiment_smoke(tmp_path):
    report = reclab.run_bias_experiment(
        out_dir=tmp_path, trials=2, n_users=50, n_items=100, n_features=3,
        lam=15.0, decoy_size=20, list_depth=5, cutoff=5, metrics=["ndcg"],
        seed=4, threads=1,
    )
    assert (tmp_path / "bias_trials.csv").exists()
    assert (tmp_path / "bias_report.csv").exists()
    algos = {row["algo"] for row in report}
    assert algos == {"implicit-mf", "item-knn-implicit", "popular", "oracle", "random"}
    for row in report:
        assert row["bias" if "bias" in row else "mean_bias"] == row["mean_bias"]
        assert row["n_trials"] == 2
