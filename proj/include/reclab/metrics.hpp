#pragma once

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace reclab {

struct RankedList {
    int user = -1;
    std::vector<int> items;     // item indices, best first
    std::vector<double> scores; // parallel, non-increasing
};

using ItemSet = std::unordered_set<int>;

// Binary-gain nDCG at cutoff k; 0 when relevant is empty.
double ndcg_at(const RankedList& list, const ItemSet& relevant, int k);
double precision_at(const RankedList& list, const ItemSet& relevant, int k);
double recall_at(const RankedList& list, const ItemSet& relevant, int k);
double hit_at(const RankedList& list, const ItemSet& relevant, int k);
// 1/rank of the first relevant item within the cutoff; k <= 0 means full depth.
double reciprocal_rank(const RankedList& list, const ItemSet& relevant, int k = 0);

// Mean popularity rank of the whole list (not cutoff-truncated); rank 1 is the
// least popular item. ranks indexed by dense item index.
double mean_popularity_rank(const RankedList& list, std::span<const double> ranks);
double popularity_tendency(std::span<const RankedList> lists, std::span<const double> ranks);

// Per-user metric accumulation for one (algo, strategy) cell.
struct MetricAccumulator {
    struct Entry {
        int user;
        double value;
        bool empty_relevant;  // flagged, not dropped; aggregation may exclude
    };
    std::vector<Entry> values;

    void add(int user, double value, bool empty_relevant = false) {
        values.push_back({user, value, empty_relevant});
    }
    size_t n_empty_relevant() const;
    double mean(bool include_empty_relevant = true) const;
    size_t count(bool include_empty_relevant = true) const;
};

double metric_at(const std::string& name, const RankedList& list, const ItemSet& relevant, int k);
const std::vector<std::string>& ranking_metric_names();

}  // namespace reclab
