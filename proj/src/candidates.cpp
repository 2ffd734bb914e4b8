#include "reclab/candidates.hpp"

#include <algorithm>
#include <cmath>

namespace reclab {

std::string strategy_kind_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::full: return "full";
        case StrategyKind::uniform: return "uniform";
        case StrategyKind::popularity_weighted: return "pop-weighted";
    }
    return "?";
}

StrategyKind strategy_kind_from_name(const std::string& name) {
    if (name == "full") return StrategyKind::full;
    if (name == "uniform") return StrategyKind::uniform;
    if (name == "pop-weighted" || name == "popularity-weighted")
        return StrategyKind::popularity_weighted;
    throw DataError("unknown candidate strategy: " + name);
}

std::string CandidateStrategy::label() const {
    if (kind == StrategyKind::full) return "full";
    return strategy_kind_name(kind) + "-" + std::to_string(n_decoys.value());
}

FoldContext::FoldContext(const Fold& fold) : fold_(&fold) {
    size_t n_users = fold.train.n_users();
    train_items_.assign(n_users, {});
    test_items_.assign(n_users, {});
    test_user_.assign(n_users, false);
    for (int u : fold.test_users) test_user_[u] = true;
    for (const auto& r : fold.train.rows()) train_items_[r.user].push_back(r.item);
    for (const auto& r : fold.test.rows()) test_items_[r.user].push_back(r.item);
    for (auto& v : train_items_) std::sort(v.begin(), v.end());
    for (auto& v : test_items_) std::sort(v.begin(), v.end());
    train_counts_.assign(fold.train.n_items(), 0);
    for (const auto& r : fold.train.rows()) ++train_counts_[r.item];
}

bool FoldContext::is_test_user(int user) const {
    return user >= 0 && static_cast<size_t>(user) < test_user_.size() && test_user_[user];
}

namespace {

// items not in the user's train or test sets, ascending
std::vector<int> decoy_pool(int user, const FoldContext& ctx) {
    const auto& train = ctx.train_items(user);
    const auto& test = ctx.test_items(user);
    std::vector<int> pool;
    pool.reserve(ctx.n_items());
    size_t ti = 0, si = 0;
    for (int i = 0; i < static_cast<int>(ctx.n_items()); ++i) {
        while (ti < train.size() && train[ti] < i) ++ti;
        while (si < test.size() && test[si] < i) ++si;
        bool in_train = ti < train.size() && train[ti] == i;
        bool in_test = si < test.size() && test[si] == i;
        if (!in_train && !in_test) pool.push_back(i);
    }
    return pool;
}

void require_test_user(int user, const FoldContext& ctx) {
    if (!ctx.is_test_user(user))
        throw DataError("user index " + std::to_string(user) + " is not a test user of fold " +
                        std::to_string(ctx.fold().fold_id));
}

}  // namespace

CandidateSet build_full(int user, const FoldContext& ctx) {
    require_test_user(user, ctx);
    CandidateSet out;
    out.user = user;
    out.test_items = ctx.test_items(user);
    out.decoys = decoy_pool(user, ctx);
    return out;
}

CandidateSet build_uniform(int user, const FoldContext& ctx, int n_decoys, uint64_t seed) {
    require_test_user(user, ctx);
    if (n_decoys < 0) throw DataError("n_decoys must be >= 0");
    CandidateSet out;
    out.user = user;
    out.test_items = ctx.test_items(user);
    std::vector<int> pool = decoy_pool(user, ctx);
    size_t take = std::min<size_t>(n_decoys, pool.size());
    out.clamped = take < static_cast<size_t>(n_decoys);
    Rng rng = stream_rng_user(seed, "cand-uniform", static_cast<uint64_t>(ctx.fold().fold_id),
                              ctx.fold().train.user_id(user));
    // partial Fisher-Yates: first `take` positions are the sample
    for (size_t i = 0; i < take; ++i) {
        size_t j = i + static_cast<size_t>(rng.uniform_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    out.decoys.assign(pool.begin(), pool.begin() + take);
    std::sort(out.decoys.begin(), out.decoys.end());
    return out;
}

std::vector<int> sample_weighted_without_replacement(const std::vector<int>& pool,
                                                     const std::vector<double>& weights, size_t n,
                                                     Rng& rng) {
    n = std::min(n, pool.size());
    if (n == 0) return {};
    // Efraimidis-Spirakis: key = log(u)/w, keep the n largest keys
    std::vector<std::pair<double, int>> keyed(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        keyed[i] = {std::log(u) / weights[i], pool[i]};
    }
    std::partial_sort(keyed.begin(), keyed.begin() + n, keyed.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<int> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = keyed[i].second;
    return out;
}

CandidateSet build_popularity_weighted(int user, const FoldContext& ctx, int n_decoys,
                                       uint64_t seed) {
    require_test_user(user, ctx);
    if (n_decoys < 0) throw DataError("n_decoys must be >= 0");
    CandidateSet out;
    out.user = user;
    out.test_items = ctx.test_items(user);
    std::vector<int> pool = decoy_pool(user, ctx);
    const auto& counts = ctx.train_counts();
    std::vector<double> weights(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) {
        long long c = counts[pool[i]];
        weights[i] = c > 0 ? static_cast<double>(c) : 0.1;  // epsilon keeps cold items sampleable
    }
    size_t take = std::min<size_t>(n_decoys, pool.size());
    out.clamped = take < static_cast<size_t>(n_decoys);
    Rng rng = stream_rng_user(seed, "cand-pop", static_cast<uint64_t>(ctx.fold().fold_id),
                              ctx.fold().train.user_id(user));
    out.decoys = sample_weighted_without_replacement(pool, weights, take, rng);
    std::sort(out.decoys.begin(), out.decoys.end());
    return out;
}

CandidateSet build_candidates(int user, const FoldContext& ctx, const CandidateStrategy& strategy,
                              uint64_t seed) {
    switch (strategy.kind) {
        case StrategyKind::full: return build_full(user, ctx);
        case StrategyKind::uniform:
            return build_uniform(user, ctx, strategy.n_decoys.value(), seed);
        case StrategyKind::popularity_weighted:
            return build_popularity_weighted(user, ctx, strategy.n_decoys.value(), seed);
    }
    throw DataError("unreachable strategy kind");
}

std::vector<CandidateStrategy> sweep_sizes(const std::vector<StrategyKind>& kinds,
                                           const std::vector<int>& sizes) {
    std::vector<CandidateStrategy> out;
    for (StrategyKind k : kinds) {
        if (k == StrategyKind::full) continue;
        if (sizes.empty()) throw DataError("sweep_sizes: sampled kinds need a size list");
        for (int s : sizes) out.push_back(CandidateStrategy{k, s});
    }
    // the full strategy is always part of the sweep
    out.push_back(CandidateStrategy{StrategyKind::full, {}});
    return out;
}

}  // namespace reclab
