#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace polydp {

/// Uniform in [0, 1) from the top 53 bits of one engine draw; avoids
/// std::uniform_real_distribution so transcripts replay identically for a
/// given seed regardless of library internals.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Laplace(0, scale) by inverse CDF; scale 0 returns exactly 0.
inline double laplace(std::mt19937_64& rng, double scale) {
    if (scale <= 0.0) return 0.0;
    double u;
    do {
        u = uniform_unit(rng) - 0.5;  // [-0.5, 0.5), rejecting the -inf endpoint
    } while (u == -0.5);
    // log1p keeps precision near u = 0; the sign flip mirrors the tail.
    return u < 0.0 ? scale * std::log1p(2.0 * u) : -scale * std::log1p(-2.0 * u);
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

}  // namespace polydp
