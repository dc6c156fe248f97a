#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "polydp/combin.hpp"
#include "polydp/errors.hpp"
#include "polydp/sparse_poly.hpp"
#include "polydp/univariate.hpp"

namespace polydp {

/// OR over +-1 inputs, -1 = TRUE: -1 iff some coordinate is -1.
inline int or_value(std::span<const std::int8_t> y) {
    for (std::int8_t v : y)
        if (v < 0) return -1;
    return 1;
}

/// H_{d,k}: all +-1 vectors with at most k coordinates equal to -1.
struct HammingBall {
    int dimension = 0;
    int radius = 0;

    std::uint64_t count() const { return binomial_sum(dimension, radius); }

    /// Enumerates the ball, reusing one buffer; the span passed to `fn`
    /// is invalidated by the next callback.
    template <class F>
    void for_each(F&& fn) const {
        std::vector<std::int8_t> y(static_cast<std::size_t>(dimension), 1);
        for_each_subset_up_to(dimension, radius, [&](std::span<const int> neg) {
            for (int i : neg) y[static_cast<std::size_t>(i)] = -1;
            fn(std::span<const std::int8_t>(y));
            for (int i : neg) y[static_cast<std::size_t>(i)] = 1;
        });
    }
};

enum class AmplifierKind { chebyshev, interpolation };
enum class ApproxMode { restricted, global };

/// Unexpanded OR-of-ORs approximation G(y) = 1 - 2 q(m - Z(y)) where
/// Z(y) sums the exact inner OR polynomials over a block partition of the
/// variables. Restricted mode promises |G - OR_d| <= gamma on H_{d,k};
/// global mode promises it on all of {-1,1}^d.
struct ApproxSpec {
    int dimension = 0;
    int block_count = 0;
    std::vector<std::vector<int>> blocks;  // disjoint cover of 0..d-1
    UniPoly amplifier;
    AmplifierKind amplifier_kind = AmplifierKind::interpolation;
    ApproxMode mode = ApproxMode::restricted;
    int hamming_radius = 0;  // k in restricted mode, d in global mode
    double gamma = 0.0;
    int degree_bound = 0;      // deg(amplifier) * max block size
    double weight_bound = 0.0;  // analytic expansion bound, recorded at build

    /// m - Z(y): twice the number of blocks containing a TRUE input.
    int outer_argument(std::span<const std::int8_t> y) const {
        int true_blocks = 0;
        for (const auto& block : blocks) {
            for (int i : block) {
                if (y[static_cast<std::size_t>(i)] < 0) {
                    ++true_blocks;
                    break;
                }
            }
        }
        return 2 * true_blocks;
    }

    /// G(y) without expansion; linear in d plus deg(amplifier).
    double evaluate(std::span<const std::int8_t> y) const {
        if (static_cast<int>(y.size()) != dimension)
            throw std::invalid_argument("ApproxSpec::evaluate: dimension mismatch");
        return 1.0 - 2.0 * amplifier(static_cast<double>(outer_argument(y)));
    }
};

inline double evaluate_approx(const ApproxSpec& spec, std::span<const std::int8_t> y) {
    return spec.evaluate(y);
}

namespace detail {

inline std::vector<std::vector<int>> partition_blocks(int d, int m) {
    // Block sizes ceil(d/m) or floor(d/m); conceptually the short blocks
    // are padded with always-FALSE phantoms, which contribute nothing to
    // m - Z, so only the real variables are stored.
    std::vector<std::vector<int>> blocks(static_cast<std::size_t>(m));
    int base = d / m, extra = d % m, next = 0;
    for (int j = 0; j < m; ++j) {
        int size = base + (j < extra ? 1 : 0);
        for (int i = 0; i < size; ++i) blocks[static_cast<std::size_t>(j)].push_back(next++);
    }
    return blocks;
}

inline int max_block_size(const std::vector<std::vector<int>>& blocks) {
    std::size_t mx = 0;
    for (const auto& b : blocks) mx = std::max(mx, b.size());
    return static_cast<int>(mx);
}

/// Coarse but honest expansion weight bound:
/// w(1 - 2 q(m - Z)) <= 1 + 2 sum_i |c_i| w(m - Z)^i, using
/// w(m - Z) = sum_j w(1 - p_{b_j}) = sum_j (4 - 2^{2 - b_j}) and the
/// submultiplicativity of the coefficient L1 norm.
inline double expansion_weight_bound(const UniPoly& q, const std::vector<std::vector<int>>& blocks) {
    double affine_weight = 0.0;
    for (const auto& b : blocks)
        if (!b.empty()) affine_weight += 4.0 - std::ldexp(1.0, 2 - static_cast<int>(b.size()));
    double bound = 1.0;
    double power = 1.0;
    for (int i = 1; i <= q.degree(); ++i) {
        power *= affine_weight;
        bound += 2.0 * std::abs(q.coefficient(i)) * power;
    }
    return bound;
}

inline AmplifierKind default_amplifier(int k, int d) {
    // The interpolation amplifier is exact and lower-degree for small k;
    // Chebyshev takes over where interpolation's degree-k cost dominates.
    // k = d is the fully exact regime, where interpolation always wins.
    return (k <= 8 || k == d) ? AmplifierKind::interpolation : AmplifierKind::chebyshev;
}

}  // namespace detail

/// Restricted approximation (accurate on H_{d,k}). Requires k <= m <= d.
inline ApproxSpec build_restricted_approx(int d, int k, int m, double gamma,
                                          AmplifierKind kind) {
    if (!(1 <= k && k <= m && m <= d))
        throw std::invalid_argument("build_restricted_approx: need 1 <= k <= m <= d");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("build_restricted_approx: gamma must lie in (0,1)");
    ApproxSpec spec;
    spec.dimension = d;
    spec.block_count = m;
    spec.blocks = detail::partition_blocks(d, m);
    spec.amplifier_kind = kind;
    spec.amplifier = kind == AmplifierKind::interpolation ? interpolation_amplifier(k)
                                                          : chebyshev_amplifier(k, gamma);
    spec.mode = ApproxMode::restricted;
    spec.hamming_radius = k;
    spec.gamma = gamma;
    spec.degree_bound = spec.amplifier.degree() * detail::max_block_size(spec.blocks);
    spec.weight_bound = detail::expansion_weight_bound(spec.amplifier, spec.blocks);
    return spec;
}

inline ApproxSpec build_restricted_approx(int d, int k, int m, double gamma) {
    return build_restricted_approx(d, k, m, gamma, detail::default_amplifier(k, d));
}

/// Global approximation (accurate on all of {-1,1}^d); the amplifier must
/// cover up to m TRUE blocks, so it is built with radius m.
inline ApproxSpec build_global_approx(int d, int m, double gamma) {
    if (!(1 <= m && m <= d)) throw std::invalid_argument("build_global_approx: need 1 <= m <= d");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("build_global_approx: gamma must lie in (0,1)");
    ApproxSpec spec;
    spec.dimension = d;
    spec.block_count = m;
    spec.blocks = detail::partition_blocks(d, m);
    spec.amplifier_kind = AmplifierKind::chebyshev;
    spec.amplifier = chebyshev_amplifier(m, gamma);
    spec.mode = ApproxMode::global;
    spec.hamming_radius = d;
    spec.gamma = gamma;
    spec.degree_bound = spec.amplifier.degree() * detail::max_block_size(spec.blocks);
    spec.weight_bound = detail::expansion_weight_bound(spec.amplifier, spec.blocks);
    return spec;
}

/// Scans m for the smallest derived degree bound subject to the weight
/// cap; ties prefer the lighter, then the smaller, m. In restricted mode
/// m starts at k; k = d degenerates to the exact interpolation regime.
inline int choose_block_count(int d, int k, double gamma, ApproxMode mode, double weight_cap) {
    if (!(1 <= k && k <= d)) throw std::invalid_argument("choose_block_count: need 1 <= k <= d");
    int best_m = -1;
    int best_t = std::numeric_limits<int>::max();
    double best_w = std::numeric_limits<double>::infinity();
    const int lo = mode == ApproxMode::restricted ? k : 1;
    for (int m = lo; m <= d; ++m) {
        ApproxSpec spec = mode == ApproxMode::restricted
                              ? build_restricted_approx(d, k, m, gamma)
                              : build_global_approx(d, m, gamma);
        if (!std::isfinite(spec.weight_bound) || spec.weight_bound > weight_cap) continue;
        if (spec.degree_bound < best_t ||
            (spec.degree_bound == best_t && spec.weight_bound < best_w)) {
            best_m = m;
            best_t = spec.degree_bound;
            best_w = spec.weight_bound;
        }
    }
    if (best_m < 0)
        throw weight_cap_exceeded("choose_block_count: no block count satisfies the weight cap; raise it");
    return best_m;
}

/// Full multilinear expansion of the spec, for realized degree/weight
/// measurement and for small-d release pipelines.
inline SparsePoly expand(const ApproxSpec& spec, std::size_t term_cap = SparsePoly::kDefaultTermCap) {
    std::vector<SparsePoly> inners;
    inners.reserve(spec.blocks.size());
    for (const auto& block : spec.blocks) {
        if (block.empty()) continue;  // fully phantom block: 1 - p = 0
        SparsePoly local = exact_or(static_cast<int>(block.size()));
        SparsePoly embedded(spec.dimension);
        for (const auto& [mono, c] : local.terms()) {
            Monomial global;
            global.reserve(mono.size());
            for (int i : mono) global.push_back(block[static_cast<std::size_t>(i)]);
            std::sort(global.begin(), global.end());
            embedded.set_coefficient(std::move(global), c);
        }
        inners.push_back(std::move(embedded));
    }
    // A fully phantom block contributes 0 to m - Z (its inner OR is the
    // constant FALSE), so it drops out of both m and Z.
    int effective_m = static_cast<int>(inners.size());
    if (inners.empty()) return SparsePoly::constant(spec.dimension, 1.0 - 2.0 * spec.amplifier(0.0));
    return compose_affine(spec.amplifier, effective_m, inners, term_cap);
}

/// Record restriction: substitute y_i = 1 wherever x_i = 0 (the y^x
/// convention). Degree and weight never increase.
inline SparsePoly restrict_to_record(const SparsePoly& p, std::span<const std::uint8_t> record) {
    if (static_cast<int>(record.size()) != p.dimension())
        throw std::invalid_argument("restrict_to_record: record length mismatch");
    SparsePoly r(p.dimension());
    Monomial kept;
    for (const auto& [mono, c] : p.terms()) {
        kept.clear();
        for (int i : mono)
            if (record[static_cast<std::size_t>(i)]) kept.push_back(i);
        r.add_to_coefficient(kept, c);
    }
    return r;
}

inline ApproxSpec restrict_to_record(const ApproxSpec& spec, std::span<const std::uint8_t> record) {
    if (static_cast<int>(record.size()) != spec.dimension)
        throw std::invalid_argument("restrict_to_record: record length mismatch");
    ApproxSpec r = spec;
    for (auto& block : r.blocks) {
        std::vector<int> kept;
        for (int i : block)
            if (record[static_cast<std::size_t>(i)]) kept.push_back(i);
        block = std::move(kept);
    }
    r.degree_bound = r.amplifier.degree() * detail::max_block_size(r.blocks);
    r.weight_bound = detail::expansion_weight_bound(r.amplifier, r.blocks);
    return r;
}

struct BallReport {
    double max_error = 0.0;
    std::vector<std::int8_t> argmax;
    std::uint64_t points = 0;
};

/// Exhaustive |G - OR_d| over H_{d,k}. `enumeration_budget` guards the
/// ball size; `threads` splits the scan by leading index with a final
/// max-reduction.
inline BallReport verify_on_ball(const ApproxSpec& spec, int k,
                                 std::uint64_t enumeration_budget = std::uint64_t{1} << 26,
                                 int threads = 1) {
    HammingBall ball{spec.dimension, k};
    const std::uint64_t points = ball.count();
    if (points > enumeration_budget)
        throw budget_exceeded("verify_on_ball: ball exceeds enumeration budget");

    BallReport report;
    report.points = points;

    auto scan_radius_range = [&](int r_lo, int r_hi, BallReport& local) {
        std::vector<std::int8_t> y(static_cast<std::size_t>(spec.dimension), 1);
        for (int r = r_lo; r <= r_hi && r <= spec.dimension; ++r) {
            for_each_combination(spec.dimension, r, [&](std::span<const int> neg) {
                for (int i : neg) y[static_cast<std::size_t>(i)] = -1;
                double err = std::abs(spec.evaluate(y) - or_value(y));
                if (err > local.max_error) {
                    local.max_error = err;
                    local.argmax.assign(y.begin(), y.end());
                }
                for (int i : neg) y[static_cast<std::size_t>(i)] = 1;
            });
        }
    };

    if (threads <= 1 || k == 0) {
        scan_radius_range(0, k, report);
    } else {
        // Radii are uneven in size; interleave them across workers.
        int nthreads = std::min(threads, k + 1);
        std::vector<BallReport> partial(static_cast<std::size_t>(nthreads));
        std::vector<std::thread> pool;
        for (int w = 0; w < nthreads; ++w) {
            pool.emplace_back([&, w]() {
                for (int r = w; r <= k; r += nthreads) scan_radius_range(r, r, partial[static_cast<std::size_t>(w)]);
            });
        }
        for (auto& th : pool) th.join();
        for (auto& part : partial) {
            if (part.max_error > report.max_error) {
                report.max_error = part.max_error;
                report.argmax = part.argmax;
            }
        }
    }
    return report;
}

}  // namespace polydp
