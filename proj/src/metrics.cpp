#include "reclab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reclab {

namespace {
size_t depth_of(const RankedList& list, int k) {
    size_t d = list.items.size();
    if (k > 0) d = std::min<size_t>(d, static_cast<size_t>(k));
    return d;
}
}  // namespace

double ndcg_at(const RankedList& list, const ItemSet& relevant, int k) {
    if (k < 1) throw std::invalid_argument("ndcg_at: k must be >= 1");
    if (relevant.empty()) return 0.0;
    size_t depth = depth_of(list, k);
    double dcg = 0.0;
    for (size_t r = 0; r < depth; ++r)
        if (relevant.count(list.items[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    size_t ideal = std::min<size_t>(static_cast<size_t>(k), relevant.size());
    double idcg = 0.0;
    for (size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    return dcg / idcg;
}

namespace {
size_t hits_at(const RankedList& list, const ItemSet& relevant, int k) {
    size_t depth = depth_of(list, k);
    size_t h = 0;
    for (size_t r = 0; r < depth; ++r)
        if (relevant.count(list.items[r])) ++h;
    return h;
}
}  // namespace

double precision_at(const RankedList& list, const ItemSet& relevant, int k) {
    if (k < 1) throw std::invalid_argument("precision_at: k must be >= 1");
    return static_cast<double>(hits_at(list, relevant, k)) / static_cast<double>(k);
}

double recall_at(const RankedList& list, const ItemSet& relevant, int k) {
    if (k < 1) throw std::invalid_argument("recall_at: k must be >= 1");
    if (relevant.empty()) return 0.0;
    return static_cast<double>(hits_at(list, relevant, k)) / static_cast<double>(relevant.size());
}

double hit_at(const RankedList& list, const ItemSet& relevant, int k) {
    if (k < 1) throw std::invalid_argument("hit_at: k must be >= 1");
    return hits_at(list, relevant, k) >= 1 ? 1.0 : 0.0;
}

double reciprocal_rank(const RankedList& list, const ItemSet& relevant, int k) {
    size_t depth = depth_of(list, k);
    for (size_t r = 0; r < depth; ++r)
        if (relevant.count(list.items[r])) return 1.0 / static_cast<double>(r + 1);
    return 0.0;
}

double mean_popularity_rank(const RankedList& list, std::span<const double> ranks) {
    if (list.items.empty()) throw std::invalid_argument("mean_popularity_rank: empty list");
    double sum = 0.0;
    for (int item : list.items) {
        if (item < 0 || static_cast<size_t>(item) >= ranks.size())
            throw std::invalid_argument("mean_popularity_rank: item without a popularity rank");
        sum += ranks[item];
    }
    return sum / static_cast<double>(list.items.size());
}

double popularity_tendency(std::span<const RankedList> lists, std::span<const double> ranks) {
    if (lists.empty()) throw std::invalid_argument("popularity_tendency: no lists");
    double sum = 0.0;
    for (const auto& l : lists) sum += mean_popularity_rank(l, ranks);
    return sum / static_cast<double>(lists.size());
}

size_t MetricAccumulator::n_empty_relevant() const {
    size_t n = 0;
    for (const auto& e : values)
        if (e.empty_relevant) ++n;
    return n;
}

double MetricAccumulator::mean(bool include_empty_relevant) const {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& e : values) {
        if (!include_empty_relevant && e.empty_relevant) continue;
        sum += e.value;
        ++n;
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

size_t MetricAccumulator::count(bool include_empty_relevant) const {
    if (include_empty_relevant) return values.size();
    return values.size() - n_empty_relevant();
}

const std::vector<std::string>& ranking_metric_names() {
    static const std::vector<std::string> names = {"ndcg", "precision", "recall", "recip_rank",
                                                   "hit"};
    return names;
}

double metric_at(const std::string& name, const RankedList& list, const ItemSet& relevant, int k) {
    if (name == "ndcg") return ndcg_at(list, relevant, k);
    if (name == "precision") return precision_at(list, relevant, k);
    if (name == "recall") return recall_at(list, relevant, k);
    if (name == "recip_rank") return reciprocal_rank(list, relevant, k);
    if (name == "hit") return hit_at(list, relevant, k);
    throw std::invalid_argument("unknown metric: " + name);
}

}  // namespace reclab
