#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace reclab {

// splitmix64 finalizer; used to derive independent stream seeds.
uint64_t mix64(uint64_t x);

// Order-sensitive combine for building stream keys from (seed, tag, ids...).
uint64_t hash_combine(uint64_t h, uint64_t v);
uint64_t hash_str(uint64_t h, std::string_view s);

// Deterministic RNG with cross-platform reproducible distributions.
// mt19937_64 is fully specified by the standard; all variate transforms
// below are implemented here rather than via std:: distributions, whose
// output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(mix64(seed)) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), unbiased via rejection.
    uint64_t uniform_below(uint64_t n);

    double normal();
    double exponential() ;
    // Gamma(shape, 1) via Marsaglia-Tsang, with the boost trick for shape < 1.
    double gamma(double shape);
    // Inversion below lambda = 30, PTRS rejection above.
    long poisson(double lambda);

    std::vector<double> dirichlet(std::span<const double> alpha);
    std::vector<double> dirichlet_symmetric(double alpha, size_t k);

    // Index draw from an unnormalized cumulative weight vector.
    size_t draw_from_cdf(std::span<const double> cdf);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// RNG for a named substream: hash of (seed, tag, ids...), so results do not
// depend on iteration order or thread schedule.
Rng stream_rng(uint64_t seed, std::string_view tag, std::initializer_list<uint64_t> ids = {});
Rng stream_rng_user(uint64_t seed, std::string_view tag, uint64_t fold_id, std::string_view user_id);

}  // namespace reclab
