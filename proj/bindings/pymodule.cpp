#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "reclab/experiment.hpp"

namespace py = pybind11;
using namespace reclab;

namespace {

struct PyFold {
    Fold fold;
    std::shared_ptr<FoldContext> ctx;

    const FoldContext& context() {
        if (!ctx) ctx = std::make_shared<FoldContext>(fold);
        return *ctx;
    }
};

RecommenderSpec make_spec(const std::string& kind, const std::string& mode, uint64_t seed,
                          const py::kwargs& hp) {
    RecommenderSpec spec;
    spec.kind = algo_kind_from_name(kind);
    if (mode == "explicit")
        spec.mode = FeedbackMode::explicit_fb;
    else if (mode == "implicit")
        spec.mode = FeedbackMode::implicit_fb;
    else
        throw DataError("mode must be 'explicit' or 'implicit'");
    spec.seed = seed;
    for (const auto& [key, value] : hp) {
        std::string k = py::cast<std::string>(key);
        if (k == "neighbors") {
            spec.hp.item_knn_neighbors = py::cast<int>(value);
            spec.hp.user_knn_neighbors = py::cast<int>(value);
        } else if (k == "factors") {
            spec.hp.mf_factors = py::cast<int>(value);
        } else if (k == "iterations") {
            spec.hp.mf_iterations = py::cast<int>(value);
        } else if (k == "reg") {
            spec.hp.mf_reg = py::cast<double>(value);
        } else if (k == "weight") {
            spec.hp.mf_weight = py::cast<double>(value);
        } else {
            throw DataError("unknown hyperparameter: " + k);
        }
    }
    spec.validate();
    return spec;
}

CandidateStrategy make_strategy(const std::string& kind, std::optional<int> n_decoys) {
    CandidateStrategy s;
    s.kind = strategy_kind_from_name(kind);
    if (s.kind != StrategyKind::full) {
        if (!n_decoys) throw DataError("n_decoys required for sampled strategies");
        s.n_decoys = *n_decoys;
    }
    return s;
}

}  // namespace

PYBIND11_MODULE(_reclab, m) {
    m.doc() = "Offline top-N recommender evaluation laboratory";

    py::register_exception<DataError>(m, "DataError");
    py::register_exception<ColdStartError>(m, "ColdStartError");

    py::class_<InteractionSet>(m, "Dataset")
        .def_static(
            "from_file",
            [](const std::filesystem::path& path, const std::string& format) {
                return load_interactions(path, format_preset(format));
            },
            py::arg("path"), py::arg("format") = "csv")
        .def_static(
            "from_tuples",
            [](const std::vector<std::tuple<std::string, std::string, py::object>>& rows) {
                std::vector<Interaction> out;
                out.reserve(rows.size());
                for (const auto& [u, i, v] : rows) {
                    Interaction r{u, i, {}, {}};
                    if (!v.is_none()) r.value = py::cast<double>(v);
                    out.push_back(std::move(r));
                }
                return InteractionSet::from_interactions(out);
            },
            py::arg("rows"))
        .def("__len__", &InteractionSet::size)
        .def_property_readonly("n_users", &InteractionSet::n_users)
        .def_property_readonly("n_items", &InteractionSet::n_items)
        .def(
            "summary",
            [](const InteractionSet& s, const std::string& name) {
                DatasetSummary d = summarize(s, name);
                return py::dict(py::arg("name") = d.name, py::arg("n_ratings") = d.n_ratings,
                                py::arg("n_users") = d.n_users, py::arg("n_items") = d.n_items,
                                py::arg("density") = d.density, py::arg("gini") = d.gini);
            },
            py::arg("name") = "")
        .def("item_counts", [](const InteractionSet& s) { return item_popularity(s).counts; });

    m.def("gini_index", [](const std::vector<double>& counts) { return gini_index(counts); },
          py::arg("counts"));

    py::class_<PyFold>(m, "Fold")
        .def_property_readonly("fold_id", [](const PyFold& f) { return f.fold.fold_id; })
        .def_property_readonly("train", [](const PyFold& f) { return f.fold.train; })
        .def_property_readonly("test", [](const PyFold& f) { return f.fold.test; })
        .def_property_readonly("test_users", [](const PyFold& f) {
            std::vector<std::string> ids;
            for (int u : f.fold.test_users) ids.push_back(f.fold.train.user_id(u));
            return ids;
        });

    m.def(
        "crossfold_users",
        [](const InteractionSet& data, int n_folds, double test_fraction, int min_ratings,
           uint64_t seed) {
            SplitPlan plan = crossfold_users(data, n_folds, test_fraction, min_ratings, seed);
            std::vector<PyFold> out;
            for (auto& f : plan.folds) out.push_back({std::move(f), nullptr});
            return out;
        },
        py::arg("data"), py::arg("n_folds") = 5, py::arg("test_fraction") = 0.2,
        py::arg("min_ratings") = 5, py::arg("seed") = 42);

    py::class_<CandidateSet>(m, "CandidateSet")
        .def_property_readonly("test_items", [](const CandidateSet& c) { return c.test_items; })
        .def_property_readonly("decoys", [](const CandidateSet& c) { return c.decoys; })
        .def_property_readonly("clamped", [](const CandidateSet& c) { return c.clamped; })
        .def("__len__", &CandidateSet::size);

    m.def(
        "build_candidates",
        [](PyFold& fold, const std::string& user, const std::string& kind,
           std::optional<int> n_decoys, uint64_t seed) {
            auto idx = fold.fold.train.user_index(user);
            if (!idx) throw DataError("unknown user: " + user);
            return build_candidates(*idx, fold.context(), make_strategy(kind, n_decoys), seed);
        },
        py::arg("fold"), py::arg("user"), py::arg("kind") = "full",
        py::arg("n_decoys") = py::none(), py::arg("seed") = 42);

    py::class_<TrainedModel, std::unique_ptr<TrainedModel>>(m, "Model")
        .def(
            "recommend",
            [](const TrainedModel& model, const InteractionSet& data, const std::string& user,
               const CandidateSet& candidates, int n) {
                auto idx = data.user_index(user);
                if (!idx) throw DataError("unknown user: " + user);
                RankedList list = model.recommend_top_n(*idx, candidates, n);
                std::vector<std::pair<std::string, double>> out;
                for (size_t i = 0; i < list.items.size(); ++i)
                    out.emplace_back(data.item_id(list.items[i]), list.scores[i]);
                return out;
            },
            py::arg("data"), py::arg("user"), py::arg("candidates"), py::arg("n") = 10);

    m.def(
        "train",
        [](const InteractionSet& data, const std::string& kind, const std::string& mode,
           uint64_t seed, const py::kwargs& hp) { return train(make_spec(kind, mode, seed, hp), data); },
        py::arg("data"), py::arg("kind"), py::arg("mode") = "implicit", py::arg("seed") = 42);

    m.def(
        "metric",
        [](const std::string& name, const std::vector<int>& ranked,
           const std::vector<int>& relevant, int k) {
            RankedList list;
            list.user = 0;
            list.items = ranked;
            list.scores.assign(ranked.size(), 0.0);
            return metric_at(name, list, ItemSet(relevant.begin(), relevant.end()), k);
        },
        py::arg("name"), py::arg("ranked"), py::arg("relevant"), py::arg("k") = 10);
    m.def("ranking_metric_names", &ranking_metric_names);

    m.def(
        "generate_preferences",
        [](int n_users, int n_items, int n_features, double alpha, double beta, double lam,
           uint64_t seed) {
            LdaParams p;
            p.n_users = n_users;
            p.n_items = n_items;
            p.n_features = n_features;
            p.alpha = alpha;
            p.beta = beta;
            p.lambda = lam;
            p.seed = seed;
            return generate_preferences(p).liked;
        },
        py::arg("n_users"), py::arg("n_items"), py::arg("n_features") = 50,
        py::arg("alpha") = 0.1, py::arg("beta") = 0.05, py::arg("lam") = 165.0,
        py::arg("seed") = 42);

    m.def(
        "run_bias_experiment",
        [](const std::filesystem::path& out_dir, int trials, int n_users, int n_items,
           int n_features, double lam, int decoy_size, int list_depth, int cutoff,
           std::vector<std::string> metrics, uint64_t seed, int threads) {
            BiasSettings b;
            b.trials = trials;
            b.lda.n_users = n_users;
            b.lda.n_items = n_items;
            b.lda.n_features = n_features;
            b.lda.lambda = lam;
            b.decoy_size = decoy_size;
            b.list_depth = list_depth;
            b.cutoff = cutoff;
            b.metrics = std::move(metrics);
            b.seed = seed;
            b.threads = threads;
            BiasOutcome outcome = run_bias_experiment(b, out_dir);
            py::list report;
            for (const auto& r : outcome.report) {
                py::dict row;
                row["algo"] = r.algo;
                row["strategy"] = r.strategy;
                row["metric"] = r.metric;
                row["mean_bias"] = r.mean_bias;
                row["std_error"] = r.has_std_error ? py::object(py::float_(r.std_error))
                                                   : py::object(py::none());
                row["frac_negative"] = r.frac_negative;
                row["n_trials"] = r.n_trials;
                report.append(row);
            }
            return report;
        },
        py::arg("out_dir"), py::arg("trials") = 20, py::arg("n_users") = 2000,
        py::arg("n_items") = 1500, py::arg("n_features") = 50, py::arg("lam") = 60.0,
        py::arg("decoy_size") = 1000, py::arg("list_depth") = 50, py::arg("cutoff") = 50,
        py::arg("metrics") = std::vector<std::string>{"ndcg", "recip_rank"}, py::arg("seed") = 42,
        py::arg("threads") = 0);
}
