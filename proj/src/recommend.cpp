#include "reclab/recommend.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "reclab/rng.hpp"

namespace reclab {

namespace {
constexpr double kUnscorable = -std::numeric_limits<double>::infinity();
}

std::string algo_kind_name(AlgoKind k) {
    switch (k) {
        case AlgoKind::item_knn: return "item-knn";
        case AlgoKind::user_knn: return "user-knn";
        case AlgoKind::implicit_mf: return "implicit-mf";
        case AlgoKind::popular: return "popular";
        case AlgoKind::random_rec: return "random";
        case AlgoKind::oracle: return "oracle";
    }
    return "?";
}

AlgoKind algo_kind_from_name(const std::string& name) {
    if (name == "item-knn") return AlgoKind::item_knn;
    if (name == "user-knn") return AlgoKind::user_knn;
    if (name == "implicit-mf") return AlgoKind::implicit_mf;
    if (name == "popular") return AlgoKind::popular;
    if (name == "random") return AlgoKind::random_rec;
    if (name == "oracle") return AlgoKind::oracle;
    throw DataError("unknown algorithm: " + name);
}

std::string RecommenderSpec::label() const {
    std::string base = algo_kind_name(kind);
    if (kind == AlgoKind::item_knn && mode == FeedbackMode::implicit_fb) return base + "-implicit";
    return base;
}

void RecommenderSpec::validate() const {
    switch (kind) {
        case AlgoKind::item_knn:
            break;  // both modes
        case AlgoKind::user_knn:
            if (mode != FeedbackMode::explicit_fb)
                throw DataError("user-knn supports explicit mode only");
            break;
        case AlgoKind::implicit_mf:
            if (mode != FeedbackMode::implicit_fb)
                throw DataError("implicit-mf supports implicit mode only");
            break;
        default:
            break;  // popular/random/oracle are mode-free
    }
}

RankedList TrainedModel::score_candidates(int user, const CandidateSet& candidates) const {
    if (candidates.size() == 0) throw DataError("score_candidates: empty candidate set");
    std::vector<int> items;
    items.reserve(candidates.size());
    std::merge(candidates.test_items.begin(), candidates.test_items.end(),
               candidates.decoys.begin(), candidates.decoys.end(), std::back_inserter(items));
    std::vector<double> scores(items.size());
    score(user, items, scores);

    std::vector<size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return item_id_rank_[items[a]] < item_id_rank_[items[b]];
    });

    RankedList out;
    out.user = user;
    out.items.resize(items.size());
    out.scores.resize(items.size());
    for (size_t i = 0; i < order.size(); ++i) {
        out.items[i] = items[order[i]];
        out.scores[i] = scores[order[i]];
    }
    return out;
}

RankedList TrainedModel::recommend_top_n(int user, const CandidateSet& candidates, int n) const {
    if (n < 1) throw DataError("recommend_top_n: n must be >= 1");
    RankedList full = score_candidates(user, candidates);
    size_t keep = std::min<size_t>(n, full.items.size());
    full.items.resize(keep);
    full.scores.resize(keep);
    return full;
}

namespace {

// ---------- Popular ----------

class PopularModel final : public TrainedModel {
public:
    PopularModel(RecommenderSpec spec, const InteractionSet& data)
        : TrainedModel(std::move(spec)), counts_(data.n_items(), 0) {
        for (const auto& r : data.rows()) ++counts_[r.item];
    }

    void score(int, std::span<const int> items, std::span<double> out) const override {
        for (size_t i = 0; i < items.size(); ++i)
            out[i] = static_cast<double>(counts_[items[i]]);
    }

private:
    std::vector<long long> counts_;
};

// ---------- Random ----------

class RandomModel final : public TrainedModel {
public:
    RandomModel(RecommenderSpec spec, const InteractionSet& data)
        : TrainedModel(std::move(spec)), vocab_(data.vocab()) {}

    void score(int user, std::span<const int> items, std::span<double> out) const override {
        // per (seed, user, item) hash; independent of candidate set composition
        uint64_t h = hash_str(mix64(spec_.seed), "random-score");
        h = hash_str(h, vocab_->user_ids.at(user));
        for (size_t i = 0; i < items.size(); ++i) {
            uint64_t hi = hash_str(h, vocab_->item_ids[items[i]]);
            out[i] = static_cast<double>(mix64(hi) >> 11) * 0x1.0p-53;
        }
    }

private:
    std::shared_ptr<const Vocab> vocab_;
};

// ---------- Oracle ----------

class OracleModel final : public TrainedModel {
public:
    OracleModel(RecommenderSpec spec, const InteractionSet& data, const TruePreferences& truth)
        : TrainedModel(std::move(spec)) {
        // map vocab users/items (decimal-string ids) into the truth index space
        liked_.resize(data.n_users());
        const auto& vocab = *data.vocab();
        std::vector<int> item_map(vocab.item_ids.size(), -1);
        for (size_t i = 0; i < vocab.item_ids.size(); ++i) {
            int idx = parse_id(vocab.item_ids[i]);
            if (idx >= 0 && idx < truth.n_items) item_map[i] = idx;
        }
        for (size_t u = 0; u < vocab.user_ids.size(); ++u) {
            int tu = parse_id(vocab.user_ids[u]);
            if (tu < 0 || tu >= truth.n_users)
                throw DataError("oracle: user id '" + vocab.user_ids[u] +
                                "' has no true-preference entry");
            const auto& tl = truth.liked[tu];
            for (size_t i = 0; i < item_map.size(); ++i)
                if (item_map[i] >= 0 &&
                    std::binary_search(tl.begin(), tl.end(), item_map[i]))
                    liked_[u].insert(static_cast<int>(i));
        }
    }

    void score(int user, std::span<const int> items, std::span<double> out) const override {
        const auto& set = liked_.at(user);
        for (size_t i = 0; i < items.size(); ++i) out[i] = set.count(items[i]) ? 1.0 : 0.0;
    }

private:
    static int parse_id(const std::string& s) {
        try {
            size_t pos = 0;
            int v = std::stoi(s, &pos);
            return pos == s.size() ? v : -1;
        } catch (...) {
            return -1;
        }
    }
    std::vector<std::unordered_set<int>> liked_;
};

// ---------- Item k-NN ----------

class ItemKnnModel final : public TrainedModel {
public:
    ItemKnnModel(RecommenderSpec spec, const InteractionSet& data)
        : TrainedModel(std::move(spec)) {
        const bool implicit = spec_.mode == FeedbackMode::implicit_fb;
        const size_t n_items = data.n_items();
        const size_t n_users = data.n_users();

        item_mean_.assign(n_items, 0.0);
        if (!implicit) {
            std::vector<long long> cnt(n_items, 0);
            for (const auto& r : data.rows()) {
                item_mean_[r.item] += r.value;
                ++cnt[r.item];
            }
            for (size_t i = 0; i < n_items; ++i)
                if (cnt[i] > 0) item_mean_[i] /= static_cast<double>(cnt[i]);
        }

        // centered (or unit) ratings, user-major
        std::vector<std::vector<std::pair<int, double>>> by_user(n_users);
        std::vector<double> norm(n_items, 0.0);
        for (const auto& r : data.rows()) {
            double v = implicit ? 1.0 : r.value - item_mean_[r.item];
            by_user[r.user].emplace_back(r.item, v);
            norm[r.item] += v * v;
        }
        for (auto& n : norm) n = std::sqrt(n);

        // dense co-product accumulation; item counts in this artifact are small
        // enough (<= tens of thousands of ratings per user never occur)
        std::vector<std::vector<double>> dot(n_items, std::vector<double>(n_items, 0.0));
        for (const auto& items : by_user)
            for (size_t a = 0; a < items.size(); ++a)
                for (size_t b = a + 1; b < items.size(); ++b) {
                    double p = items[a].second * items[b].second;
                    dot[items[a].first][items[b].first] += p;
                }

        const int k = spec_.hp.item_knn_neighbors;
        neighbors_.resize(n_items);
        std::vector<std::pair<double, int>> cand;
        for (size_t i = 0; i < n_items; ++i) {
            cand.clear();
            for (size_t j = 0; j < n_items; ++j) {
                if (i == j || norm[i] == 0.0 || norm[j] == 0.0) continue;
                double d = i < j ? dot[i][j] : dot[j][i];
                double sim = d / (norm[i] * norm[j]);
                if (sim > 0.0) cand.emplace_back(sim, static_cast<int>(j));
            }
            size_t keep = std::min<size_t>(k, cand.size());
            std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(),
                              std::greater<>());
            auto& lst = neighbors_[i];
            lst.assign(cand.begin(), cand.begin() + keep);
            std::sort(lst.begin(), lst.end(),
                      [](const auto& a, const auto& b) { return a.second < b.second; });
        }

        // per-user rating lookup
        ratings_.resize(n_users);
        for (const auto& r : data.rows())
            ratings_[r.user][r.item] = implicit ? 1.0 : r.value;
    }

    void score(int user, std::span<const int> items, std::span<double> out) const override {
        if (user < 0 || static_cast<size_t>(user) >= ratings_.size() || ratings_[user].empty())
            throw ColdStartError("item-knn: user has no training interactions");
        const bool implicit = spec_.mode == FeedbackMode::implicit_fb;
        const auto& ur = ratings_[user];
        for (size_t x = 0; x < items.size(); ++x) {
            int i = items[x];
            double num = 0.0, den = 0.0;
            bool any = false;
            for (const auto& [sim, j] : neighbors_[i]) {
                auto it = ur.find(j);
                if (it == ur.end()) continue;
                any = true;
                if (implicit) {
                    num += sim;
                } else {
                    num += sim * (it->second - item_mean_[j]);
                    den += sim;
                }
            }
            if (!any || (!implicit && den == 0.0)) {
                out[x] = kUnscorable;
            } else {
                out[x] = implicit ? num : item_mean_[i] + num / den;
            }
        }
    }

private:
    std::vector<double> item_mean_;
    std::vector<std::vector<std::pair<double, int>>> neighbors_;  // (sim, item), item ascending
    std::vector<std::unordered_map<int, double>> ratings_;
};

// ---------- User k-NN (explicit) ----------

class UserKnnModel final : public TrainedModel {
public:
    UserKnnModel(RecommenderSpec spec, const InteractionSet& data)
        : TrainedModel(std::move(spec)) {
        const size_t n_users = data.n_users();
        const size_t n_items = data.n_items();
        user_mean_.assign(n_users, 0.0);
        std::vector<long long> cnt(n_users, 0);
        for (const auto& r : data.rows()) {
            user_mean_[r.user] += r.value;
            ++cnt[r.user];
        }
        for (size_t u = 0; u < n_users; ++u)
            if (cnt[u] > 0) user_mean_[u] /= static_cast<double>(cnt[u]);

        centered_.resize(n_users);
        norm_.assign(n_users, 0.0);
        raters_.resize(n_items);
        for (const auto& r : data.rows()) {
            double v = r.value - user_mean_[r.user];
            centered_[r.user].emplace_back(r.item, v);
            norm_[r.user] += v * v;
            raters_[r.item].emplace_back(r.user, v);
        }
        for (auto& n : norm_) n = std::sqrt(n);
        for (auto& v : centered_) std::sort(v.begin(), v.end());
        item_of_user_.resize(n_users);
        for (size_t u = 0; u < n_users; ++u)
            for (const auto& [i, v] : centered_[u]) item_of_user_[u].emplace(i, v);
    }

    void score(int user, std::span<const int> items, std::span<double> out) const override {
        if (user < 0 || static_cast<size_t>(user) >= centered_.size() || centered_[user].empty())
            throw ColdStartError("user-knn: user has no training interactions");

        // cosine similarity of `user` to every co-rating user
        std::vector<double> sim(centered_.size(), 0.0);
        for (const auto& [i, v] : centered_[user])
            for (const auto& [other, ov] : raters_[i])
                if (other != user) sim[other] += v * ov;
        for (size_t v = 0; v < sim.size(); ++v) {
            if (sim[v] != 0.0 && norm_[user] > 0.0 && norm_[v] > 0.0)
                sim[v] /= norm_[user] * norm_[v];
            else
                sim[v] = 0.0;
        }

        const int k = spec_.hp.user_knn_neighbors;
        std::vector<std::pair<double, int>> cand;
        for (size_t x = 0; x < items.size(); ++x) {
            int i = items[x];
            cand.clear();
            for (const auto& [v, cv] : raters_[i])
                if (sim[v] > 0.0) cand.emplace_back(sim[v], v);
            size_t keep = std::min<size_t>(k, cand.size());
            if (keep == 0) {
                out[x] = kUnscorable;
                continue;
            }
            std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), std::greater<>());
            double num = 0.0, den = 0.0;
            for (size_t c = 0; c < keep; ++c) {
                auto [s, v] = cand[c];
                num += s * item_of_user_[v].at(i);
                den += std::abs(s);
            }
            out[x] = den > 0.0 ? user_mean_[user] + num / den : kUnscorable;
        }
    }

private:
    std::vector<double> user_mean_, norm_;
    std::vector<std::vector<std::pair<int, double>>> centered_;  // per user (item, centered)
    std::vector<std::vector<std::pair<int, double>>> raters_;    // per item (user, centered)
    std::vector<std::unordered_map<int, double>> item_of_user_;
};

// ---------- Implicit MF (confidence-weighted ALS) ----------

class ImplicitMfModel final : public TrainedModel {
public:
    ImplicitMfModel(RecommenderSpec spec, const InteractionSet& data)
        : TrainedModel(std::move(spec)) {
        const int k = spec_.hp.mf_factors;
        const size_t n_users = data.n_users();
        const size_t n_items = data.n_items();

        by_user_.resize(n_users);
        std::vector<std::vector<std::pair<int, double>>> by_item(n_items);
        for (const auto& r : data.rows()) {
            double v = r.has_value ? r.value : 1.0;
            by_user_[r.user].emplace_back(r.item, v);
            by_item[r.item].emplace_back(r.user, v);
        }

        Rng rng = stream_rng(spec_.seed, "als-init");
        user_f_ = Eigen::MatrixXd(k, n_users);
        item_f_ = Eigen::MatrixXd(k, n_items);
        for (Eigen::Index j = 0; j < user_f_.cols(); ++j)
            for (Eigen::Index i = 0; i < user_f_.rows(); ++i) user_f_(i, j) = 0.01 * rng.normal();
        for (Eigen::Index j = 0; j < item_f_.cols(); ++j)
            for (Eigen::Index i = 0; i < item_f_.rows(); ++i) item_f_(i, j) = 0.01 * rng.normal();

        for (int it = 0; it < spec_.hp.mf_iterations; ++it) {
            solve_side(user_f_, item_f_, by_user_);
            solve_side(item_f_, user_f_, by_item);
        }
    }

    void score(int user, std::span<const int> items, std::span<double> out) const override {
        if (user < 0 || static_cast<size_t>(user) >= by_user_.size() || by_user_[user].empty())
            throw ColdStartError("implicit-mf: user has no training interactions");
        for (size_t i = 0; i < items.size(); ++i)
            out[i] = user_f_.col(user).dot(item_f_.col(items[i]));
    }

    double objective(const InteractionSet& data) const {
        const double w = spec_.hp.mf_weight;
        const double reg = spec_.hp.mf_reg;
        // c = 1 everywhere, p = 0; observed cells add (c-1) weight and p = 1
        Eigen::MatrixXd gram = item_f_ * item_f_.transpose();
        double obj = 0.0;
        for (Eigen::Index u = 0; u < user_f_.cols(); ++u)
            obj += user_f_.col(u).dot(gram * user_f_.col(u));  // sum over all items of (x.y)^2
        for (const auto& r : data.rows()) {
            double v = r.has_value ? r.value : 1.0;
            double c = 1.0 + w * v;
            double pred = user_f_.col(r.user).dot(item_f_.col(r.item));
            obj += c * (1.0 - pred) * (1.0 - pred) - pred * pred;
        }
        obj += reg * (user_f_.squaredNorm() + item_f_.squaredNorm());
        return obj;
    }

private:
    void solve_side(Eigen::MatrixXd& target, const Eigen::MatrixXd& other,
                    const std::vector<std::vector<std::pair<int, double>>>& obs) {
        const int k = static_cast<int>(target.rows());
        const double w = spec_.hp.mf_weight;
        const double reg = spec_.hp.mf_reg;
        Eigen::MatrixXd gram = other * other.transpose();
        gram.diagonal().array() += reg;
        for (size_t idx = 0; idx < obs.size(); ++idx) {
            if (obs[idx].empty()) {
                target.col(idx).setZero();
                continue;
            }
            Eigen::MatrixXd a = gram;
            Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
            for (const auto& [j, v] : obs[idx]) {
                double conf = 1.0 + w * v;
                a.noalias() += (conf - 1.0) * other.col(j) * other.col(j).transpose();
                b.noalias() += conf * other.col(j);
            }
            target.col(idx) = a.ldlt().solve(b);
        }
    }

    std::vector<std::vector<std::pair<int, double>>> by_user_;
    Eigen::MatrixXd user_f_, item_f_;

    friend double reclab::als_objective(const TrainedModel&, const InteractionSet&);
};

}  // namespace

std::unique_ptr<TrainedModel> train(const RecommenderSpec& spec, const InteractionSet& train_data,
                                    const TruePreferences* truth) {
    spec.validate();
    if (train_data.empty()) throw DataError("train: empty training data");
    std::unique_ptr<TrainedModel> model;
    switch (spec.kind) {
        case AlgoKind::popular:
            model = std::make_unique<PopularModel>(spec, train_data);
            break;
        case AlgoKind::random_rec:
            model = std::make_unique<RandomModel>(spec, train_data);
            break;
        case AlgoKind::oracle:
            if (!truth) throw DataError("train: oracle requires true preference data");
            model = std::make_unique<OracleModel>(spec, train_data, *truth);
            break;
        case AlgoKind::item_knn:
            model = std::make_unique<ItemKnnModel>(spec, train_data);
            break;
        case AlgoKind::user_knn:
            model = std::make_unique<UserKnnModel>(spec, train_data);
            break;
        case AlgoKind::implicit_mf:
            model = std::make_unique<ImplicitMfModel>(spec, train_data);
            break;
    }
    model->item_id_rank_ = train_data.vocab()->item_id_rank;
    return model;
}

double als_objective(const TrainedModel& model, const InteractionSet& train_data) {
    const auto* mf = dynamic_cast<const ImplicitMfModel*>(&model);
    if (!mf) throw DataError("als_objective: model is not implicit-mf");
    return mf->objective(train_data);
}

std::vector<double> als_objective_trace(const RecommenderSpec& spec,
                                        const InteractionSet& train_data) {
    std::vector<double> trace;
    for (int iters = 1; iters <= spec.hp.mf_iterations; ++iters) {
        RecommenderSpec s = spec;
        s.hp.mf_iterations = iters;
        ImplicitMfModel model(s, train_data);
        trace.push_back(model.objective(train_data));
    }
    return trace;
}

}  // namespace reclab
