#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "reclab/candidates.hpp"
#include "reclab/metrics.hpp"
#include "reclab/simulate.hpp"

namespace reclab {

enum class AlgoKind { item_knn, user_knn, implicit_mf, popular, random_rec, oracle };
enum class FeedbackMode { explicit_fb, implicit_fb };

std::string algo_kind_name(AlgoKind k);
AlgoKind algo_kind_from_name(const std::string& name);

struct Hyperparams {
    int item_knn_neighbors = 20;
    int user_knn_neighbors = 30;
    int mf_factors = 50;
    int mf_iterations = 20;
    double mf_reg = 0.1;
    double mf_weight = 40.0;  // implicit confidence weight
};

struct RecommenderSpec {
    AlgoKind kind = AlgoKind::popular;
    FeedbackMode mode = FeedbackMode::implicit_fb;
    Hyperparams hp;
    uint64_t seed = 0;

    // e.g. "item-knn" (explicit), "item-knn-implicit", "popular"
    std::string label() const;
    void validate() const;
};

struct ColdStartError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class TrainedModel {
public:
    virtual ~TrainedModel() = default;

    // Scores every candidate; unscorable candidates sink to the bottom with a
    // -inf sentinel. Ties broken by ascending item id.
    RankedList score_candidates(int user, const CandidateSet& candidates) const;
    RankedList recommend_top_n(int user, const CandidateSet& candidates, int n) const;

    const RecommenderSpec& spec() const { return spec_; }

protected:
    explicit TrainedModel(RecommenderSpec spec) : spec_(std::move(spec)) {}
    // Raw model scores; may return -inf for unscorable items. Throws
    // ColdStartError for users unknown to a personalized model.
    virtual void score(int user, std::span<const int> items, std::span<double> out) const = 0;

    RecommenderSpec spec_;
    std::vector<int> item_id_rank_;  // captured from training vocab for tie-breaks

    friend std::unique_ptr<TrainedModel> train(const RecommenderSpec&, const InteractionSet&,
                                               const TruePreferences*);
};

std::unique_ptr<TrainedModel> train(const RecommenderSpec& spec, const InteractionSet& train_data,
                                    const TruePreferences* truth = nullptr);

// Confidence-weighted ALS objective over the full matrix; exposed for
// monotonicity checks on small instances (O(users x items x factors)).
double als_objective(const TrainedModel& model, const InteractionSet& train_data);

// Internal knob for tests: run ALS with a given iteration count and report the
// objective after each iteration.
std::vector<double> als_objective_trace(const RecommenderSpec& spec,
                                        const InteractionSet& train_data);

}  // namespace reclab
