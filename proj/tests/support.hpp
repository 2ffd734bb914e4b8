#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "reclab/corpus.hpp"
#include "reclab/rng.hpp"

namespace reclab::testsupport {

// Deterministic per-item count vector with a target Gini index: capped power
// law c_i = clamp(A * i^-s, 1, max_count), A solved for the total and s for
// the Gini.
inline std::vector<long long> counts_with_gini(double target_gini, size_t n_items,
                                               long long total, long long max_count) {
    auto counts_for = [&](double s) {
        std::vector<double> raw(n_items);
        for (size_t i = 0; i < n_items; ++i) raw[i] = std::pow(static_cast<double>(i + 1), -s);
        // inner search: scale A so that sum of clamped counts hits the total
        double lo = 0.0, hi = 1e12;
        for (int iter = 0; iter < 200; ++iter) {
            double a = 0.5 * (lo + hi);
            double sum = 0.0;
            for (double r : raw) sum += std::clamp(a * r, 1.0, static_cast<double>(max_count));
            (sum < static_cast<double>(total) ? lo : hi) = a;
        }
        double a = 0.5 * (lo + hi);
        std::vector<double> c(n_items);
        for (size_t i = 0; i < n_items; ++i)
            c[i] = std::clamp(a * raw[i], 1.0, static_cast<double>(max_count));
        return c;
    };

    // outer search: steeper s concentrates mass, raising Gini
    double lo = 0.0, hi = 3.0;
    for (int iter = 0; iter < 100; ++iter) {
        double s = 0.5 * (lo + hi);
        auto c = counts_for(s);
        (gini_index(c) < target_gini ? lo : hi) = s;
    }
    auto real_counts = counts_for(0.5 * (lo + hi));

    // round with largest remainders so the total is exact
    std::vector<long long> counts(n_items);
    long long sum = 0;
    std::vector<std::pair<double, size_t>> rema(n_items);
    for (size_t i = 0; i < n_items; ++i) {
        counts[i] = static_cast<long long>(std::floor(real_counts[i]));
        sum += counts[i];
        rema[i] = {real_counts[i] - std::floor(real_counts[i]), i};
    }
    std::sort(rema.begin(), rema.end(), std::greater<>());
    for (size_t i = 0; sum < total && i < rema.size(); ++i) {
        if (counts[rema[i].second] < max_count) {
            ++counts[rema[i].second];
            ++sum;
        }
    }
    return counts;
}

// Synthetic stand-in for a 100k-rating movie dataset: 943 users, 1682 items,
// 100,000 ratings, item-popularity Gini ~0.629. Used when the real file is
// not on disk (see ml100k_path()).
inline InteractionSet synthetic_ml100k() {
    const size_t n_items = 1682;
    const int n_users = 943;
    auto counts = counts_with_gini(0.6290, n_items, 100000, n_users);
    std::vector<Interaction> rows;
    rows.reserve(100000);
    for (size_t i = 0; i < n_items; ++i) {
        int base = static_cast<int>((i * 17) % n_users);
        for (long long j = 0; j < counts[i]; ++j) {
            int u = static_cast<int>((base + 7 * j) % n_users);
            double rating = static_cast<double>((u + static_cast<int>(i) + j) % 5 + 1);
            rows.push_back({std::to_string(u + 1), std::to_string(i + 1), rating,
                            874000000 + static_cast<int64_t>(i) * 600 + j});
        }
    }
    return InteractionSet::from_interactions(rows);
}

// Path to the real ML-100K u.data if the environment provides one.
inline std::optional<std::filesystem::path> ml100k_path() {
    const char* env = std::getenv("RECLAB_ML100K");
    if (env && std::filesystem::exists(env)) return std::filesystem::path(env);
    return std::nullopt;
}

// Loads the real ML-100K when available, otherwise writes the synthetic
// surrogate to a temp file and loads that (exercising the same load path).
inline InteractionSet ml100k_or_surrogate(bool* is_real = nullptr) {
    if (auto p = ml100k_path()) {
        if (is_real) *is_real = true;
        return load_interactions(*p, format_preset("ml100k"));
    }
    if (is_real) *is_real = false;
    return synthetic_ml100k();
}

// Small random implicit dataset for property tests.
inline InteractionSet random_implicit(Rng& rng, int n_users, int n_items, double density) {
    std::vector<Interaction> rows;
    for (int u = 0; u < n_users; ++u)
        for (int i = 0; i < n_items; ++i)
            if (rng.uniform() < density)
                rows.push_back({"u" + std::to_string(u), "i" + std::to_string(i), {}, {}});
    // make sure no user or item is entirely absent
    for (int u = 0; u < n_users; ++u)
        rows.push_back({"u" + std::to_string(u), "i0", {}, {}});
    for (int i = 0; i < n_items; ++i)
        rows.push_back({"u0", "i" + std::to_string(i), {}, {}});
    return InteractionSet::from_interactions(rows);
}

inline InteractionSet random_explicit(Rng& rng, int n_users, int n_items, double density) {
    std::vector<Interaction> rows;
    for (int u = 0; u < n_users; ++u)
        for (int i = 0; i < n_items; ++i)
            if (rng.uniform() < density) {
                double rating = 1.0 + static_cast<double>(rng.uniform_below(5));
                rows.push_back({"u" + std::to_string(u), "i" + std::to_string(i), rating, {}});
            }
    for (int u = 0; u < n_users; ++u)
        rows.push_back({"u" + std::to_string(u), "i0", 3.0, {}});
    for (int i = 0; i < n_items; ++i)
        rows.push_back({"u0", "i" + std::to_string(i), 3.0, {}});
    return InteractionSet::from_interactions(rows);
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("reclab-test-" + tag + "-" + std::to_string(::getpid()));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() { std::filesystem::remove_all(dir_); }
    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace reclab::testsupport
