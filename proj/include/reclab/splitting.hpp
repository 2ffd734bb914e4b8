#pragma once

#include <filesystem>

#include "reclab/corpus.hpp"

namespace reclab {

struct Fold {
    InteractionSet train;
    InteractionSet test;
    std::vector<int> test_users;  // dense user indices, ascending
    int fold_id = 0;
};

struct SplitPlan {
    std::vector<Fold> folds;
    uint64_t seed = 0;
    int n_folds = 0;
    double test_fraction = 0.0;
};

// Partition eligible users (>= min_ratings interactions) into n_folds subsets;
// each fold's test users hold out ceil(test_fraction * |I_u|) interactions
// (capped at |I_u| - 1 so every test user keeps a train interaction).
SplitPlan crossfold_users(const InteractionSet& data, int n_folds, double test_fraction,
                          int min_ratings, uint64_t seed);

struct ExternalSplit {
    Fold fold;
    size_t dropped_users = 0;  // test users with no train interactions
};

// Pairs an organically collected train set with an externally supplied test
// set (e.g. a forced-sample MAR panel). Both are re-indexed into one vocabulary.
ExternalSplit external_test_split(const InteractionSet& train_data, const InteractionSet& test_data);

// CSV persistence: columns fold,user,item,value,part with part in {train,test}.
void write_fold_csv(const Fold& fold, const std::filesystem::path& path);
Fold read_fold_csv(const std::filesystem::path& path);

}  // namespace reclab
