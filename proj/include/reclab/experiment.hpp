#pragma once

#include <filesystem>
#include <functional>

#include "reclab/recommend.hpp"

namespace reclab {

// Single 80/20-style per-user holdout: every eligible user becomes a test user.
Fold holdout_all_users(const InteractionSet& data, double test_fraction, int min_ratings,
                       uint64_t seed);

struct SweepSettings {
    int n_folds = 5;
    double test_fraction = 0.2;
    int min_ratings = 5;
    std::vector<RecommenderSpec> algorithms;
    std::vector<CandidateStrategy> strategies;
    std::vector<std::string> metrics = {"ndcg", "precision", "recall", "recip_rank"};
    int cutoff = 10;
    int list_depth = 10;
    bool include_empty_relevant = true;
    uint64_t seed = 42;
    int threads = 0;  // 0 = hardware concurrency
    std::string config_echo;  // serialized config, embedded in output headers
};

struct SweepOutcome {
    size_t n_cells = 0;
    size_t n_computed = 0;
    size_t n_skipped = 0;  // already present per manifest
    size_t n_failed = 0;
    std::vector<std::string> failures;  // "cell: message"
};

// Fold x algorithm x strategy sweep over real data. Per-cell CSVs plus
// aggregate sweep_results.csv and manifest.csv; completed cells are skipped
// on rerun.
SweepOutcome run_sweep(const InteractionSet& data, const SweepSettings& settings,
                       const std::filesystem::path& out_dir);

struct BiasSettings {
    LdaParams lda;  // seed field ignored; per-trial seeds derived from master seed
    double observe_fraction = 0.3;
    double observe_gamma = 0.5;
    double test_fraction = 0.2;
    int min_observed = 2;
    int decoy_size = 1000;
    int list_depth = 50;
    int cutoff = 50;
    std::vector<std::string> metrics = {"ndcg", "recip_rank"};
    int trials = 500;
    uint64_t seed = 42;
    int threads = 0;
    Hyperparams hp;
    std::string config_echo;
};

struct BiasTrialResult {
    int trial = -1;
    bool failed = false;
    std::string error;
    size_t n_users_evaluated = 0;
    size_t n_users_dropped = 0;
    struct Row {
        std::string algo;
        std::string strategy;
        std::string metric;
        double m_obs;
        double m_truth;
        double bias;  // m_obs - m_truth
    };
    std::vector<Row> rows;
};

BiasTrialResult run_bias_trial(int trial, const BiasSettings& settings);

struct BiasReportRow {
    std::string algo, strategy, metric;
    double mean_bias = 0.0;
    double std_error = 0.0;
    bool has_std_error = false;
    double frac_negative = 0.0;
    size_t n_trials = 0;
};

std::vector<BiasReportRow> aggregate_bias(const std::vector<BiasTrialResult>& trials);

struct BiasOutcome {
    size_t n_trials = 0;
    size_t n_failed = 0;
    std::vector<BiasTrialResult> trials;
    std::vector<BiasReportRow> report;
};

// Runs the trial loop (parallel, schedule-independent) and writes
// bias_trials.csv + bias_report.csv.
BiasOutcome run_bias_experiment(const BiasSettings& settings,
                                const std::filesystem::path& out_dir);

// FNV-1a over a file's bytes, hex-encoded; used for the sweep manifest.
std::string file_content_hash(const std::filesystem::path& path);

// Deterministic parallel map: runs fn(0..n-1) on a worker pool.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn);

}  // namespace reclab
