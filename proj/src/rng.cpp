#include "reclab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace reclab {

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t hash_combine(uint64_t h, uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

uint64_t hash_str(uint64_t h, std::string_view s) {
    // FNV-1a folded into the running hash
    uint64_t f = 14695981039346656037ULL;
    for (unsigned char c : s) {
        f ^= c;
        f *= 1099511628211ULL;
    }
    return hash_combine(h, f);
}

uint64_t Rng::uniform_below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    // Box-Muller; one draw per call, second discarded for stream simplicity
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::exponential() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u);
}

double Rng::gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

long Rng::poisson(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("poisson: lambda must be non-negative");
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) {
        // product-of-uniforms inversion
        const double threshold = std::exp(-lambda);
        long k = 0;
        double p = uniform();
        while (p > threshold) {
            ++k;
            p *= uniform();
        }
        return k;
    }
    // PTRS (Hormann 1993)
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::abs(u);
        long k = static_cast<long>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
        if (us >= 0.07 && v <= vr) return k;
        if (k < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0)) {
            return k;
        }
    }
}

std::vector<double> Rng::dirichlet(std::span<const double> alpha) {
    std::vector<double> out(alpha.size());
    double sum = 0.0;
    for (size_t i = 0; i < alpha.size(); ++i) {
        out[i] = gamma(alpha[i]);
        sum += out[i];
    }
    if (sum <= 0.0) {
        // all gammas underflowed; fall back to a uniform point
        for (auto& x : out) x = 1.0 / static_cast<double>(out.size());
        return out;
    }
    for (auto& x : out) x /= sum;
    return out;
}

std::vector<double> Rng::dirichlet_symmetric(double alpha, size_t k) {
    std::vector<double> a(k, alpha);
    return dirichlet(a);
}

size_t Rng::draw_from_cdf(std::span<const double> cdf) {
    if (cdf.empty()) throw std::invalid_argument("draw_from_cdf: empty");
    double total = cdf.back();
    double u = uniform() * total;
    size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (cdf[mid] <= u)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

Rng stream_rng(uint64_t seed, std::string_view tag, std::initializer_list<uint64_t> ids) {
    uint64_t h = hash_str(mix64(seed), tag);
    for (uint64_t id : ids) h = hash_combine(h, id);
    return Rng(h);
}

Rng stream_rng_user(uint64_t seed, std::string_view tag, uint64_t fold_id, std::string_view user_id) {
    uint64_t h = hash_str(mix64(seed), tag);
    h = hash_combine(h, fold_id);
    h = hash_str(h, user_id);
    return Rng(h);
}

}  // namespace reclab
