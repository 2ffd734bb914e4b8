#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "reclab/rng.hpp"
#include "reclab/splitting.hpp"

namespace reclab {

enum class StrategyKind { full, uniform, popularity_weighted };

std::string strategy_kind_name(StrategyKind k);
StrategyKind strategy_kind_from_name(const std::string& name);

struct CandidateStrategy {
    StrategyKind kind = StrategyKind::full;
    std::optional<int> n_decoys;  // required unless full

    std::string label() const;  // e.g. "uniform-100", "full"
};

struct CandidateSet {
    int user = -1;
    std::vector<int> test_items;  // ascending item index
    std::vector<int> decoys;      // ascending item index
    bool clamped = false;         // fewer decoys available than requested

    size_t size() const { return test_items.size() + decoys.size(); }
};

// Per-fold lookup structures shared by all candidate builders; build once per
// fold, then builders are pure and safe to call concurrently.
class FoldContext {
public:
    explicit FoldContext(const Fold& fold);

    const Fold& fold() const { return *fold_; }
    bool is_test_user(int user) const;
    const std::vector<int>& train_items(int user) const { return train_items_[user]; }
    const std::vector<int>& test_items(int user) const { return test_items_[user]; }
    const std::vector<long long>& train_counts() const { return train_counts_; }
    size_t n_items() const { return train_counts_.size(); }

private:
    const Fold* fold_;
    std::vector<std::vector<int>> train_items_, test_items_;
    std::vector<bool> test_user_;
    std::vector<long long> train_counts_;
};

CandidateSet build_full(int user, const FoldContext& ctx);
CandidateSet build_uniform(int user, const FoldContext& ctx, int n_decoys, uint64_t seed);
CandidateSet build_popularity_weighted(int user, const FoldContext& ctx, int n_decoys,
                                       uint64_t seed);

CandidateSet build_candidates(int user, const FoldContext& ctx, const CandidateStrategy& strategy,
                              uint64_t seed);

// Cross product of sampled kinds x sizes; a single full strategy when requested.
std::vector<CandidateStrategy> sweep_sizes(const std::vector<StrategyKind>& kinds,
                                           const std::vector<int>& sizes);

// Weighted sampling without replacement (exponential keys): returns n indices
// from pool with probability proportional to weight at each draw.
std::vector<int> sample_weighted_without_replacement(const std::vector<int>& pool,
                                                     const std::vector<double>& weights, size_t n,
                                                     Rng& rng);

}  // namespace reclab
