#include "sxt/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sxt {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

uint64_t derive_stream_key(uint64_t master_seed, std::string_view purpose, uint64_t index) {
    uint64_t h = 0xCBF29CE484222325ULL;  // FNV offset basis
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    h = mix64(h + master_seed * kGolden);
    return mix64(h + index * kGolden);
}

StreamRng::StreamRng(uint64_t master_seed, std::string_view purpose, uint64_t index)
    : key_(derive_stream_key(master_seed, purpose, index)) {}

uint64_t StreamRng::next_u64() {
    counter_ += kGolden;
    return mix64(key_ ^ counter_);
}

double StreamRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double StreamRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double StreamRng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

long long StreamRng::poisson(double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda))
        throw std::invalid_argument("poisson: lambda must be finite and non-negative");
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) {
        // Knuth product-of-uniforms
        const double limit = std::exp(-lambda);
        long long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }
    // Hormann's PTRS transformed rejection
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        const double us = 0.5 - std::fabs(u);
        const long long k = static_cast<long long>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
        if (us >= 0.07 && v <= v_r) return k;
        if (k < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_lambda - lambda - std::lgamma(static_cast<double>(k) + 1.0))
            return k;
    }
}

}  // namespace sxt
