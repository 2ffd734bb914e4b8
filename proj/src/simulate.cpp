#include "reclab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reclab/candidates.hpp"
#include "reclab/rng.hpp"

namespace reclab {

void LdaParams::validate() const {
    if (n_features < 1) throw DataError("LdaParams: n_features must be >= 1");
    if (alpha <= 0.0 || beta <= 0.0 || lambda <= 0.0)
        throw DataError("LdaParams: alpha, beta, lambda must be positive");
    if (n_items < 2) throw DataError("LdaParams: n_items must be >= 2");
    if (n_users < 1) throw DataError("LdaParams: n_users must be >= 1");
}

size_t TruePreferences::total_pairs() const {
    size_t n = 0;
    for (const auto& v : liked) n += v.size();
    return n;
}

std::vector<long long> TruePreferences::item_counts() const {
    std::vector<long long> counts(n_items, 0);
    for (const auto& v : liked)
        for (int i : v) ++counts[i];
    return counts;
}

namespace {
InteractionSet implicit_to_set(int n_users, const std::vector<std::vector<int>>& per_user) {
    std::vector<Interaction> rows;
    for (int u = 0; u < n_users; ++u)
        for (int i : per_user[u]) rows.push_back({std::to_string(u), std::to_string(i), {}, {}});
    return InteractionSet::from_interactions(rows);
}
}  // namespace

InteractionSet TruePreferences::to_interaction_set() const {
    return implicit_to_set(n_users, liked);
}

size_t ObservedRatings::total_pairs() const {
    size_t n = 0;
    for (const auto& v : items) n += v.size();
    return n;
}

InteractionSet ObservedRatings::to_interaction_set() const {
    return implicit_to_set(n_users, items);
}

TruePreferences generate_preferences(const LdaParams& params) {
    params.validate();
    const int K = params.n_features;

    TruePreferences out;
    out.n_users = params.n_users;
    out.n_items = params.n_items;
    out.phi.resize(K);
    {
        Rng rng = stream_rng(params.seed, "lda-phi");
        for (int k = 0; k < K; ++k)
            out.phi[k] = rng.dirichlet_symmetric(params.beta, params.n_items);
    }
    // cumulative phi rows for multinomial draws
    std::vector<std::vector<double>> phi_cdf(K);
    for (int k = 0; k < K; ++k) {
        phi_cdf[k].resize(params.n_items);
        std::partial_sum(out.phi[k].begin(), out.phi[k].end(), phi_cdf[k].begin());
    }

    out.theta.resize(params.n_users);
    out.liked.resize(params.n_users);
    out.drawn_counts.resize(params.n_users);
    std::vector<double> theta_cdf(K);
    for (int u = 0; u < params.n_users; ++u) {
        Rng rng = stream_rng(params.seed, "lda-user", {static_cast<uint64_t>(u)});
        out.theta[u] = rng.dirichlet_symmetric(params.alpha, K);
        std::partial_sum(out.theta[u].begin(), out.theta[u].end(), theta_cdf.begin());
        long n_u = rng.poisson(params.lambda);
        out.drawn_counts[u] = n_u;
        std::vector<int> drawn;
        drawn.reserve(n_u);
        for (long x = 0; x < n_u; ++x) {
            size_t k = rng.draw_from_cdf(theta_cdf);
            size_t i = rng.draw_from_cdf(phi_cdf[k]);
            drawn.push_back(static_cast<int>(i));
        }
        std::sort(drawn.begin(), drawn.end());
        drawn.erase(std::unique(drawn.begin(), drawn.end()), drawn.end());
        out.liked[u] = std::move(drawn);
    }
    return out;
}

ObservedRatings observe_popularity(const TruePreferences& truth, double observe_fraction,
                                   double gamma, uint64_t seed) {
    if (!(observe_fraction > 0.0 && observe_fraction <= 1.0))
        throw DataError("observe_popularity: observe_fraction must be in (0, 1]");
    if (gamma < 0.0) throw DataError("observe_popularity: gamma must be >= 0");

    auto counts = truth.item_counts();
    ObservedRatings out;
    out.n_users = truth.n_users;
    out.n_items = truth.n_items;
    out.items.resize(truth.n_users);
    for (int u = 0; u < truth.n_users; ++u) {
        const auto& liked = truth.liked[u];
        if (liked.empty()) continue;
        size_t keep = static_cast<size_t>(
            std::llround(observe_fraction * static_cast<double>(liked.size())));
        keep = std::min(keep, liked.size());
        if (keep == 0) continue;
        if (keep == liked.size()) {
            out.items[u] = liked;
            continue;
        }
        std::vector<double> weights(liked.size());
        for (size_t i = 0; i < liked.size(); ++i)
            weights[i] = std::pow(static_cast<double>(counts[liked[i]]), gamma);
        Rng rng = stream_rng(seed, "observe", {static_cast<uint64_t>(u)});
        out.items[u] = sample_weighted_without_replacement(liked, weights, keep, rng);
        std::sort(out.items[u].begin(), out.items[u].end());
    }
    return out;
}

std::vector<FitReportRow> fit_diagnostics(const ObservedRatings& observed,
                                          const DatasetSummary& target) {
    InteractionSet set = observed.to_interaction_set();
    DatasetSummary gen = summarize(set, "generated");
    double gen_per_user = static_cast<double>(gen.n_ratings) / static_cast<double>(gen.n_users);
    double tgt_per_user =
        target.n_users > 0 ? static_cast<double>(target.n_ratings) / static_cast<double>(target.n_users)
                           : 0.0;
    std::vector<FitReportRow> rows;
    rows.push_back({"gini", gen.gini, target.gini, gen.gini - target.gini});
    rows.push_back({"density", gen.density, target.density, gen.density - target.density});
    rows.push_back({"ratings_per_user", gen_per_user, tgt_per_user, gen_per_user - tgt_per_user});
    return rows;
}

}  // namespace reclab
