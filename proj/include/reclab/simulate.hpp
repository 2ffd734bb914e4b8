#pragma once

#include <cstdint>
#include <vector>

#include "reclab/corpus.hpp"

namespace reclab {

struct LdaParams {
    int n_features = 50;         // K
    double alpha = 0.1;          // user-feature Dirichlet concentration (symmetric)
    double beta = 0.05;          // feature-item Dirichlet concentration (symmetric)
    double lambda = 165.0;       // Poisson mean item count per user
    int n_users = 6040;
    int n_items = 3706;
    uint64_t seed = 0;

    void validate() const;
};

// Complete synthetic preference data plus the latent state that generated it.
struct TruePreferences {
    int n_users = 0;
    int n_items = 0;
    std::vector<std::vector<int>> liked;     // per user, ascending, deduplicated
    std::vector<long> drawn_counts;          // n_u before dedup, per user
    std::vector<std::vector<double>> theta;  // n_users x K
    std::vector<std::vector<double>> phi;    // K x n_items

    size_t total_pairs() const;
    std::vector<long long> item_counts() const;  // true popularity per item
    InteractionSet to_interaction_set() const;
};

struct ObservedRatings {
    int n_users = 0;
    int n_items = 0;
    std::vector<std::vector<int>> items;  // per user, ascending; subset of truth

    size_t total_pairs() const;
    InteractionSet to_interaction_set() const;
};

// Feature-mixture generative sampler: K feature-item Dirichlets, per-user
// feature mixtures, Poisson item counts, two-stage multinomial draws,
// then dedup.
TruePreferences generate_preferences(const LdaParams& params);

// Popularity-biased observation: per user, keep round(fraction * |liked|)
// items sampled without replacement with weight popularity^gamma.
ObservedRatings observe_popularity(const TruePreferences& truth, double observe_fraction,
                                   double gamma, uint64_t seed);

struct FitReportRow {
    std::string stat;
    double generated = 0.0;
    double target = 0.0;
    double delta = 0.0;
};

// Side-by-side generated-vs-target shape statistics; no auto-tuning.
std::vector<FitReportRow> fit_diagnostics(const ObservedRatings& observed,
                                          const DatasetSummary& target);

}  // namespace reclab
