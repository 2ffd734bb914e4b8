#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "reclab/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace reclab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTotalFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitPartialFailure = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + where);
}

ColumnFormat format_from_json(const json& j, const std::string& where) {
    if (j.is_string()) return format_preset(j.get<std::string>());
    reject_unknown_keys(j, {"delimiter", "user_col", "item_col", "rating_col", "timestamp_col",
                            "header"},
                        where);
    ColumnFormat fmt;
    std::string d = j.value("delimiter", ",");
    if (d == "\\t" || d == "tab") d = "\t";
    if (d.size() != 1) throw ConfigError("delimiter must be a single character in " + where);
    fmt.delimiter = d[0];
    fmt.user_col = j.value("user_col", 0);
    fmt.item_col = j.value("item_col", 1);
    fmt.rating_col = j.value("rating_col", -1);
    fmt.timestamp_col = j.value("timestamp_col", -1);
    fmt.header = j.value("header", false);
    return fmt;
}

RecommenderSpec algo_from_json(const json& j) {
    reject_unknown_keys(j, {"kind", "mode", "hyperparams"}, "algorithms[]");
    RecommenderSpec spec;
    spec.kind = algo_kind_from_name(j.at("kind").get<std::string>());
    std::string mode = j.value("mode", "");
    if (mode.empty()) {
        // explicit is the paper's mode for the k-NN algorithms; implicit elsewhere
        spec.mode = (spec.kind == AlgoKind::item_knn || spec.kind == AlgoKind::user_knn)
                        ? FeedbackMode::explicit_fb
                        : FeedbackMode::implicit_fb;
    } else if (mode == "explicit") {
        spec.mode = FeedbackMode::explicit_fb;
    } else if (mode == "implicit") {
        spec.mode = FeedbackMode::implicit_fb;
    } else {
        throw ConfigError("unknown mode '" + mode + "'");
    }
    if (j.contains("hyperparams")) {
        const json& hp = j.at("hyperparams");
        reject_unknown_keys(hp, {"neighbors", "factors", "iterations", "reg", "weight"},
                            "hyperparams");
        if (hp.contains("neighbors")) {
            spec.hp.item_knn_neighbors = hp["neighbors"].get<int>();
            spec.hp.user_knn_neighbors = hp["neighbors"].get<int>();
        }
        spec.hp.mf_factors = hp.value("factors", spec.hp.mf_factors);
        spec.hp.mf_iterations = hp.value("iterations", spec.hp.mf_iterations);
        spec.hp.mf_reg = hp.value("reg", spec.hp.mf_reg);
        spec.hp.mf_weight = hp.value("weight", spec.hp.mf_weight);
    }
    spec.validate();
    return spec;
}

json load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    reject_unknown_keys(cfg, {"dataset", "split", "algorithms", "strategies", "metrics",
                              "simulation", "output", "seed"},
                        "config");
    return cfg;
}

fs::path default_out_dir() {
    const char* env = std::getenv("RECLAB_OUT_DIR");
    return env ? fs::path(env) : fs::path("reclab-out");
}

fs::path output_dir(const json& cfg, const std::string& override_dir) {
    if (!override_dir.empty()) return override_dir;
    if (cfg.contains("output")) {
        reject_unknown_keys(cfg["output"], {"dir"}, "output");
        if (cfg["output"].contains("dir")) return cfg["output"]["dir"].get<std::string>();
    }
    return default_out_dir();
}

InteractionSet load_dataset(const json& cfg) {
    if (!cfg.contains("dataset")) throw ConfigError("config is missing the dataset section");
    const json& ds = cfg["dataset"];
    reject_unknown_keys(ds, {"path", "format", "name"}, "dataset");
    return load_interactions(ds.at("path").get<std::string>(),
                             format_from_json(ds.value("format", json("csv")), "dataset.format"));
}

SweepSettings sweep_settings_from(const json& cfg, uint64_t seed, int threads) {
    SweepSettings s;
    s.seed = seed;
    s.threads = threads;
    if (cfg.contains("split")) {
        const json& sp = cfg["split"];
        reject_unknown_keys(sp, {"n_folds", "test_fraction", "min_ratings"}, "split");
        s.n_folds = sp.value("n_folds", s.n_folds);
        s.test_fraction = sp.value("test_fraction", s.test_fraction);
        s.min_ratings = sp.value("min_ratings", s.min_ratings);
    }
    if (!cfg.contains("algorithms") || cfg["algorithms"].empty())
        throw ConfigError("config needs at least one entry in algorithms[]");
    for (const auto& a : cfg["algorithms"]) s.algorithms.push_back(algo_from_json(a));
    if (!cfg.contains("strategies")) throw ConfigError("config is missing the strategies section");
    {
        const json& st = cfg["strategies"];
        reject_unknown_keys(st, {"kinds", "sizes"}, "strategies");
        std::vector<StrategyKind> kinds;
        for (const auto& k : st.at("kinds"))
            kinds.push_back(strategy_kind_from_name(k.get<std::string>()));
        std::vector<int> sizes = st.value("sizes", std::vector<int>{});
        s.strategies = sweep_sizes(kinds, sizes);
    }
    if (cfg.contains("metrics")) {
        const json& m = cfg["metrics"];
        reject_unknown_keys(m, {"names", "cutoff", "list_depth", "include_empty_relevant"},
                            "metrics");
        if (m.contains("names")) s.metrics = m["names"].get<std::vector<std::string>>();
        s.cutoff = m.value("cutoff", s.cutoff);
        s.list_depth = m.value("list_depth", std::max(s.cutoff, s.list_depth));
        s.include_empty_relevant = m.value("include_empty_relevant", true);
    }
    return s;
}

BiasSettings bias_settings_from(const json& cfg, uint64_t seed, int threads, int trials_override) {
    if (!cfg.contains("simulation")) throw ConfigError("config is missing the simulation section");
    const json& sim = cfg["simulation"];
    reject_unknown_keys(sim,
                        {"n_users", "n_items", "n_features", "alpha", "beta", "lambda",
                         "observe_fraction", "gamma", "trials", "decoy_size", "list_depth",
                         "cutoff", "min_observed", "test_fraction", "metrics", "hyperparams"},
                        "simulation");
    BiasSettings b;
    b.seed = seed;
    b.threads = threads;
    b.lda.n_users = sim.value("n_users", b.lda.n_users);
    b.lda.n_items = sim.value("n_items", b.lda.n_items);
    b.lda.n_features = sim.value("n_features", b.lda.n_features);
    b.lda.alpha = sim.value("alpha", b.lda.alpha);
    b.lda.beta = sim.value("beta", b.lda.beta);
    b.lda.lambda = sim.value("lambda", b.lda.lambda);
    b.observe_fraction = sim.value("observe_fraction", b.observe_fraction);
    b.observe_gamma = sim.value("gamma", b.observe_gamma);
    b.trials = sim.value("trials", b.trials);
    b.decoy_size = sim.value("decoy_size", b.decoy_size);
    b.list_depth = sim.value("list_depth", b.list_depth);
    b.cutoff = sim.value("cutoff", b.list_depth);
    b.min_observed = sim.value("min_observed", b.min_observed);
    b.test_fraction = sim.value("test_fraction", b.test_fraction);
    if (sim.contains("metrics")) b.metrics = sim["metrics"].get<std::vector<std::string>>();
    if (sim.contains("hyperparams")) {
        const json& hp = sim["hyperparams"];
        reject_unknown_keys(hp, {"neighbors", "factors", "iterations", "reg", "weight"},
                            "simulation.hyperparams");
        if (hp.contains("neighbors")) b.hp.item_knn_neighbors = hp["neighbors"].get<int>();
        b.hp.mf_factors = hp.value("factors", b.hp.mf_factors);
        b.hp.mf_iterations = hp.value("iterations", b.hp.mf_iterations);
        b.hp.mf_reg = hp.value("reg", b.hp.mf_reg);
        b.hp.mf_weight = hp.value("weight", b.hp.mf_weight);
    }
    if (trials_override >= 0) b.trials = trials_override;
    if (b.trials < 1) throw ConfigError("simulation.trials must be >= 1");
    return b;
}

// Resolved-config echo embedded in output headers; excludes runtime-only
// settings (thread count) so outputs stay identical across schedules.
std::string config_echo(const json& cfg, uint64_t seed) {
    json echo = cfg;
    echo["seed"] = seed;
    return echo.dump();
}

int cmd_inspect(const std::string& data_path, const std::string& format, const std::string& name,
                bool as_json) {
    try {
        InteractionSet set = load_interactions(data_path, format_preset(format));
        std::string label = name.empty() ? fs::path(data_path).stem().string() : name;
        DatasetSummary s = summarize(set, label);
        if (as_json) {
            json out = {{"dataset", s.name},     {"n_ratings", s.n_ratings},
                        {"n_users", s.n_users},  {"n_items", s.n_items},
                        {"density", s.density},  {"gini", s.gini}};
            std::cout << out.dump() << "\n";
        } else {
            std::cout << summary_csv_header() << "\n" << summary_csv_row(s) << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "inspect: " << e.what() << "\n";
        return kExitConfigError;
    }
}

int cmd_split(const std::string& data_path, const std::string& format, int n_folds,
              double fraction, int min_ratings, uint64_t seed, const std::string& out) {
    try {
        InteractionSet set = load_interactions(data_path, format_preset(format));
        SplitPlan plan = crossfold_users(set, n_folds, fraction, min_ratings, seed);
        fs::path dir = out.empty() ? default_out_dir() : fs::path(out);
        fs::create_directories(dir);
        for (const auto& fold : plan.folds) {
            fs::path p = dir / ("fold_" + std::to_string(fold.fold_id) + ".csv");
            write_fold_csv(fold, p);
            std::cerr << "wrote " << p.string() << " (" << fold.test_users.size()
                      << " test users)\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "split: " << e.what() << "\n";
        return kExitConfigError;
    }
}

int cmd_sweep(const std::string& config_path, bool dry_run, int threads, const std::string& out,
              int64_t seed_override) {
    json cfg;
    SweepSettings settings;
    fs::path dir;
    InteractionSet data;
    try {
        cfg = load_config(config_path);
        uint64_t seed = seed_override >= 0 ? static_cast<uint64_t>(seed_override)
                                           : cfg.value("seed", 42ULL);
        settings = sweep_settings_from(cfg, seed, threads);
        settings.config_echo = config_echo(cfg, seed);
        dir = output_dir(cfg, out);
        if (dry_run) {
            size_t n = static_cast<size_t>(settings.n_folds) * settings.algorithms.size() *
                       settings.strategies.size();
            std::cout << "plan: " << settings.n_folds << " folds x " << settings.algorithms.size()
                      << " algorithms x " << settings.strategies.size() << " strategies = " << n
                      << " cells\n";
            for (const auto& a : settings.algorithms)
                for (const auto& s : settings.strategies)
                    std::cout << "  " << a.label() << " / " << s.label() << "\n";
            return kExitOk;
        }
        data = load_dataset(cfg);
    } catch (const std::exception& e) {
        std::cerr << "sweep: " << e.what() << "\n";
        return kExitConfigError;
    }
    try {
        SweepOutcome outcome = run_sweep(data, settings, dir);
        std::cerr << "sweep: " << outcome.n_computed << " computed, " << outcome.n_skipped
                  << " skipped, " << outcome.n_failed << " failed (of " << outcome.n_cells
                  << " cells)\n";
        for (const auto& f : outcome.failures) std::cerr << "  failed " << f << "\n";
        if (outcome.n_failed == outcome.n_cells) return kExitTotalFailure;
        if (outcome.n_failed > 0) return kExitPartialFailure;
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "sweep: " << e.what() << "\n";
        return kExitTotalFailure;
    }
}

int cmd_simulate(const std::string& config_path, int trials, int threads, const std::string& out,
                 int64_t seed_override) {
    json cfg;
    BiasSettings settings;
    fs::path dir;
    try {
        cfg = load_config(config_path);
        uint64_t seed = seed_override >= 0 ? static_cast<uint64_t>(seed_override)
                                           : cfg.value("seed", 42ULL);
        settings = bias_settings_from(cfg, seed, threads, trials);
        settings.config_echo = config_echo(cfg, seed);
        dir = output_dir(cfg, out);
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return kExitConfigError;
    }
    try {
        BiasOutcome outcome = run_bias_experiment(settings, dir);
        std::cerr << "simulate: " << outcome.n_trials - outcome.n_failed << " trials ok, "
                  << outcome.n_failed << " failed\n";
        if (outcome.n_failed > 0) return kExitPartialFailure;
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return kExitTotalFailure;
    }
}

int cmd_report(const std::string& dir_str) {
    try {
        fs::path dir(dir_str);
        fs::path trials_csv = dir / "bias_trials.csv";
        if (!fs::exists(trials_csv))
            throw DataError("no bias_trials.csv under " + dir.string());
        std::ifstream in(trials_csv);
        std::string line, echo;
        std::vector<BiasTrialResult> trials;
        std::map<int, size_t> index;
        while (std::getline(in, line)) {
            if (line.rfind("# config: ", 0) == 0) {
                echo = line.substr(10);
                continue;
            }
            if (line.empty() || line[0] == '#' || line.rfind("trial,", 0) == 0) continue;
            std::array<std::string, 7> f;
            size_t start = 0;
            for (int k = 0; k < 7; ++k) {
                size_t pos = k < 6 ? line.find(',', start) : line.size();
                if (pos == std::string::npos) throw DataError("malformed row: " + line);
                f[k] = line.substr(start, pos - start);
                start = pos + 1;
            }
            int id = std::stoi(f[0]);
            auto [it, inserted] = index.try_emplace(id, trials.size());
            if (inserted) {
                trials.emplace_back();
                trials.back().trial = id;
            }
            if (f[1].empty()) {
                trials[it->second].failed = true;
                continue;
            }
            trials[it->second].rows.push_back({f[1], f[2], f[3], std::stod(f[4]), std::stod(f[5]),
                                               std::stod(f[6])});
        }
        auto report = aggregate_bias(trials);
        std::cout << "algo,strategy,metric,mean_bias,std_error,frac_negative,n_trials\n";
        for (const auto& r : report) {
            std::cout << r.algo << ',' << r.strategy << ',' << r.metric << ','
                      << format_double(r.mean_bias) << ',';
            if (r.has_std_error) std::cout << format_double(r.std_error);
            std::cout << ',' << format_double(r.frac_negative) << ',' << r.n_trials << '\n';
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "report: " << e.what() << "\n";
        return kExitConfigError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline top-N recommender evaluation laboratory"};
    app.require_subcommand(1);

    std::string data_path, format = "csv", name, config_path, out_dir, report_dir;
    bool as_json = false, dry_run = false;
    int n_folds = 5, min_ratings = 5, threads = 0, trials = -1;
    double fraction = 0.2;
    int64_t seed = -1;
    uint64_t split_seed = 42;

    auto* inspect = app.add_subcommand("inspect", "Summarize a dataset (counts, density, Gini)");
    inspect->add_option("--data", data_path, "interaction file")->required();
    inspect->add_option("--format", format, "format preset (ml100k, csv, csv-implicit)");
    inspect->add_option("--name", name, "dataset label for the output row");
    inspect->add_flag("--json", as_json, "emit a JSON object instead of CSV");

    auto* split = app.add_subcommand("split", "Write user-partitioned crossfold train/test files");
    split->add_option("--data", data_path)->required();
    split->add_option("--format", format);
    split->add_option("--folds", n_folds);
    split->add_option("--fraction", fraction, "per-user holdout fraction");
    split->add_option("--min-ratings", min_ratings);
    split->add_option("--seed", split_seed);
    split->add_option("--out", out_dir);

    auto* sweep = app.add_subcommand("sweep", "Run the candidate-strategy sweep from a config");
    sweep->add_option("config", config_path, "JSON config file")->required();
    sweep->add_flag("--dry-run", dry_run, "print the cell plan and exit");
    sweep->add_option("--threads", threads, "worker pool size (0 = auto)");
    sweep->add_option("--out", out_dir, "output directory override");
    sweep->add_option("--seed", seed, "master seed override");

    auto* simulate = app.add_subcommand("simulate", "Run the simulation bias-estimation loop");
    simulate->add_option("config", config_path)->required();
    simulate->add_option("--trials", trials, "trial count override");
    simulate->add_option("--threads", threads);
    simulate->add_option("--out", out_dir);
    simulate->add_option("--seed", seed);

    auto* report = app.add_subcommand("report", "Aggregate existing bias trial CSVs");
    report->add_option("--dir", report_dir, "experiment output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    if (inspect->parsed()) return cmd_inspect(data_path, format, name, as_json);
    if (split->parsed())
        return cmd_split(data_path, format, n_folds, fraction, min_ratings, split_seed, out_dir);
    if (sweep->parsed()) return cmd_sweep(config_path, dry_run, threads, out_dir, seed);
    if (simulate->parsed()) return cmd_simulate(config_path, trials, threads, out_dir, seed);
    if (report->parsed()) return cmd_report(report_dir);
    return kExitConfigError;
}
