#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polydp/combin.hpp"
#include "polydp/errors.hpp"
#include "polydp/lp.hpp"
#include "polydp/or_approx.hpp"

namespace polydp {

/// Distribution over H_{d',1} witnessing that any degree-t polynomial
/// with margin 1 for OR_{d'} on weight-<=1 inputs has non-constant weight
/// at least d'/t: mass 1/2 on the all-ones point, 1/(2d') on each of the
/// d' single-TRUE points.
struct InnerWitness {
    int dimension = 0;
    double all_ones_mass = 0.0;
    double single_mass = 0.0;  // per point

    double mass(int negated_coordinate) const {  // -1 means the all-ones point
        return negated_coordinate < 0 ? all_ones_mass : single_mass;
    }
};

inline InnerWitness build_inner_witness(int d_inner) {
    if (d_inner < 1) throw std::invalid_argument("build_inner_witness: dimension must be >= 1");
    return InnerWitness{d_inner, 0.5, 0.5 / static_cast<double>(d_inner)};
}

struct InnerCertificate {
    double balance = 0.0;           // sum mu * f, must vanish
    double worst_correlation = 0.0;  // max_{|S|<=t} |sum mu f chi_S|
    double certified_weight = 0.0;   // 1 / worst_correlation
};

/// Checks the margin-weight duality conditions for mu over H_{d',1} and
/// returns the weight it certifies: w*(OR|_{H_{d',1}}, t) >= 1 / max_S
/// |sum mu f chi_S|. Throws if the balance condition fails.
inline InnerCertificate verify_inner_witness(const InnerWitness& mu, int t) {
    const int d = mu.dimension;
    if (t < 0 || t > d) throw std::invalid_argument("verify_inner_witness: bad degree");

    // Support points: index -1 = all ones (f = +1), i = single -1 at i (f = -1).
    auto f_of = [](int point) { return point < 0 ? 1.0 : -1.0; };
    double balance = mu.mass(-1) * f_of(-1);
    for (int i = 0; i < d; ++i) balance += mu.mass(i) * f_of(i);
    if (std::abs(balance) > 1e-9)
        throw std::invalid_argument("verify_inner_witness: balance condition violated");

    InnerCertificate cert;
    cert.balance = balance;
    for_each_subset_up_to(d, t, [&](std::span<const int> set) {
        // chi_S at the all-ones point is 1; at the single -1 point i it is
        // -1 iff i is in S.
        double corr = mu.mass(-1);
        for (int i = 0; i < d; ++i) {
            bool in_set = std::find(set.begin(), set.end(), i) != set.end();
            corr += mu.mass(i) * (-1.0) * (in_set ? -1.0 : 1.0);
        }
        cert.worst_correlation = std::max(cert.worst_correlation, std::abs(corr));
    });
    cert.certified_weight = cert.worst_correlation > 0.0
                                ? 1.0 / cert.worst_correlation
                                : std::numeric_limits<double>::infinity();
    return cert;
}

/// Dual witness for the gamma-approximate degree of the outer function:
/// unit L1 mass, zero correlation with every monomial of degree < D, and
/// correlation with OR_k strictly above 2 gamma.
struct OuterWitness {
    int arity = 0;       // k
    int degree = 0;      // D
    double gamma = 0.0;
    std::vector<double> values;  // indexed by mask over {-1,1}^k; bit = coordinate is -1
    double margin = 0.0;         // sum Gamma * OR_k
};

namespace detail {

inline int chi_at_mask(std::uint32_t mask, std::uint32_t set_mask) {
    return __builtin_parity(mask & set_mask) ? -1 : 1;
}

inline int or_at_mask(std::uint32_t mask) { return mask ? -1 : 1; }

}  // namespace detail

/// Verifies the three approximate-degree duality conditions to `tol`.
inline bool verify_outer_witness(const OuterWitness& w, double tol = 1e-9) {
    const std::uint32_t points = std::uint32_t{1} << w.arity;
    if (w.values.size() != points) return false;
    double l1 = 0.0;
    for (double v : w.values) l1 += std::abs(v);
    if (std::abs(l1 - 1.0) > tol) return false;
    for (int size = 0; size < w.degree; ++size) {
        bool ok = true;
        for_each_combination(w.arity, size, [&](std::span<const int> set) {
            std::uint32_t set_mask = 0;
            for (int i : set) set_mask |= std::uint32_t{1} << i;
            double moment = 0.0;
            for (std::uint32_t mask = 0; mask < points; ++mask)
                moment += w.values[mask] * detail::chi_at_mask(mask, set_mask);
            if (std::abs(moment) > tol) ok = false;
        });
        if (!ok) return false;
    }
    double corr = 0.0;
    for (std::uint32_t mask = 0; mask < points; ++mask)
        corr += w.values[mask] * detail::or_at_mask(mask);
    return corr > 2.0 * w.gamma;
}

/// LP feasibility search for an outer witness at degree D. Returns
/// nothing when no witness exists, i.e. when D exceeds deg_{2 gamma}(OR_k)
/// -- itself informative.
inline std::optional<OuterWitness> solve_outer_witness(int k, double gamma, int D) {
    if (k < 1 || k > 12) throw std::invalid_argument("solve_outer_witness: k must be in 1..12");
    if (D < 1 || D > k) throw std::invalid_argument("solve_outer_witness: D must be in 1..k");
    if (!(gamma > 0.0 && gamma < 0.5)) throw std::invalid_argument("solve_outer_witness: gamma in (0, 0.5)");

    const std::uint32_t points = std::uint32_t{1} << k;
    // Variables: Gamma+ (points), Gamma- (points), margin surplus, then
    // slacks appended per inequality below.
    LpProblem lp;
    lp.cols = 2 * static_cast<std::size_t>(points) + 1;

    std::vector<double> row;
    // L1 normalization: sum (Gamma+ + Gamma-) = 1.
    row.assign(lp.cols, 0.0);
    for (std::uint32_t i = 0; i < points; ++i) row[i] = row[points + i] = 1.0;
    lp.add_row(row, 1.0);

    // Zero moments against every monomial of degree < D.
    for (int size = 0; size < D; ++size) {
        for_each_combination(k, size, [&](std::span<const int> set) {
            std::uint32_t set_mask = 0;
            for (int i : set) set_mask |= std::uint32_t{1} << i;
            std::vector<double> r(lp.cols, 0.0);
            for (std::uint32_t mask = 0; mask < points; ++mask) {
                double chi = detail::chi_at_mask(mask, set_mask);
                r[mask] = chi;
                r[points + mask] = -chi;
            }
            lp.add_row(std::move(r), 0.0);
        });
    }

    // Margin: sum Gamma * OR_k - surplus = 2 gamma + slack, surplus >= 0.
    constexpr double kStrictSlack = 1e-6;
    row.assign(lp.cols, 0.0);
    for (std::uint32_t mask = 0; mask < points; ++mask) {
        double f = detail::or_at_mask(mask);
        row[mask] = f;
        row[points + mask] = -f;
    }
    row[2 * points] = -1.0;
    lp.add_row(row, 2.0 * gamma + kStrictSlack);

    LpResult sol = lp_phase_one(lp);
    if (!sol.feasible) return std::nullopt;

    OuterWitness w;
    w.arity = k;
    w.degree = D;
    w.gamma = gamma;
    w.values.resize(points);
    double l1 = 0.0;
    for (std::uint32_t i = 0; i < points; ++i) {
        w.values[i] = sol.x[i] - sol.x[points + i];
        l1 += std::abs(w.values[i]);
    }
    if (l1 <= 0.0) return std::nullopt;
    // Renormalize: the split may carry shared mass; dividing by the true
    // L1 norm (<= 1) preserves the zero moments and can only grow the margin.
    for (double& v : w.values) v /= l1;
    w.margin = 0.0;
    for (std::uint32_t mask = 0; mask < points; ++mask)
        w.margin += w.values[mask] * detail::or_at_mask(mask);
    if (!verify_outer_witness(w)) return std::nullopt;
    return w;
}

/// Largest D for which an outer witness exists, i.e. deg_{2 gamma}(OR_k).
inline int outer_degree_scan(int k, double gamma) {
    int best = 0;
    for (int D = 1; D <= k; ++D) {
        if (solve_outer_witness(k, gamma, D))
            best = D;
        else
            break;
    }
    return best;
}

/// Combined witness Psi(y) = 2^k Gamma(f(Y_1), ..., f(Y_k)) prod mu(Y_i)
/// over (supp mu)^k, supported inside H_{d,k} by construction.
struct CombinedWitness {
    int dimension = 0;  // d = k * d_inner
    int arity = 0;      // k
    int inner_dimension = 0;
    // Support points: per block, -1 = all-ones or the negated coordinate.
    std::vector<std::pair<std::vector<int>, double>> points;

    std::vector<std::int8_t> point_vector(std::span<const int> blocks_negated) const {
        std::vector<std::int8_t> y(static_cast<std::size_t>(dimension), 1);
        for (int b = 0; b < arity; ++b) {
            int neg = blocks_negated[static_cast<std::size_t>(b)];
            if (neg >= 0) y[static_cast<std::size_t>(b * inner_dimension + neg)] = -1;
        }
        return y;
    }
};

inline CombinedWitness combine(const OuterWitness& gamma_w, const InnerWitness& mu, int k) {
    if (gamma_w.arity != k) throw std::invalid_argument("combine: outer witness arity mismatch");
    CombinedWitness psi;
    psi.arity = k;
    psi.inner_dimension = mu.dimension;
    psi.dimension = k * mu.dimension;
    const double scale = std::ldexp(1.0, k);  // 2^k

    // Enumerate (supp mu)^k: each block picks all-ones (-1) or one of the
    // d' single-TRUE points.
    std::vector<int> choice(static_cast<std::size_t>(k), -1);
    const int options = mu.dimension + 1;
    std::uint64_t total = 1;
    for (int i = 0; i < k; ++i) total *= static_cast<std::uint64_t>(options);
    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t c = code;
        double product = 1.0;
        std::uint32_t pattern = 0;  // bit b set iff block b evaluates TRUE
        for (int b = 0; b < k; ++b) {
            int opt = static_cast<int>(c % static_cast<std::uint64_t>(options));
            c /= static_cast<std::uint64_t>(options);
            choice[static_cast<std::size_t>(b)] = opt - 1;
            product *= mu.mass(opt - 1);
            if (opt - 1 >= 0) pattern |= std::uint32_t{1} << b;
        }
        double value = scale * gamma_w.values[pattern] * product;
        if (value != 0.0) psi.points.emplace_back(choice, value);
    }
    return psi;
}

struct DualCertificate {
    bool pass = false;
    double l1 = 0.0;
    double correlation = 0.0;     // sum Psi * OR_d
    double worst_margin = 0.0;    // min over |S| <= s of correlation - W |sum Psi chi_S|
    double worst_monomial_corr = 0.0;
    std::vector<int> worst_monomial;
    double empirical_weight_cutoff = 0.0;  // largest W that would still pass
    std::uint64_t monomials_checked = 0;
};

/// Exhaustively checks both weighted-duality conditions for Psi against
/// OR_d up to monomial degree s; a pass certifies
/// deg_{(gamma, W)}(OR_d |_{H_{d,k}}) >= s + 1.
inline DualCertificate certify_lower_bound(const CombinedWitness& psi, double gamma, double W, int s,
                                           std::uint64_t enumeration_budget = std::uint64_t{1} << 24) {
    if (binomial_sum(psi.dimension, s) > enumeration_budget)
        throw budget_exceeded("certify_lower_bound: monomial enumeration exceeds budget");

    DualCertificate cert;
    double corr = 0.0, l1 = 0.0;
    for (const auto& [blocks, value] : psi.points) {
        l1 += std::abs(value);
        bool any_true = false;
        for (int b : blocks)
            if (b >= 0) any_true = true;
        corr += value * (any_true ? -1.0 : 1.0);
    }
    cert.l1 = l1;
    cert.correlation = corr;

    double worst_abs = 0.0;
    cert.worst_margin = std::numeric_limits<double>::infinity();
    for_each_subset_up_to(psi.dimension, s, [&](std::span<const int> set) {
        ++cert.monomials_checked;
        double sum = 0.0;
        for (const auto& [blocks, value] : psi.points) {
            unsigned neg = 0;
            for (int i : set) {
                int block = i / psi.inner_dimension;
                int offset = i % psi.inner_dimension;
                if (blocks[static_cast<std::size_t>(block)] == offset) neg ^= 1u;
            }
            sum += neg ? -value : value;
        }
        double margin = corr - W * std::abs(sum);
        if (margin < cert.worst_margin) {
            cert.worst_margin = margin;
            cert.worst_monomial.assign(set.begin(), set.end());
            cert.worst_monomial_corr = sum;
        }
        worst_abs = std::max(worst_abs, std::abs(sum));
    });
    cert.empirical_weight_cutoff =
        worst_abs > 0.0 ? (corr - gamma) / worst_abs : std::numeric_limits<double>::infinity();
    cert.pass = std::abs(cert.l1 - 1.0) <= 1e-9 && cert.worst_margin > gamma;
    return cert;
}

struct PrimalResult {
    bool exists = false;
    std::vector<double> coefficients;  // lambda_S in graded-lex order when exists
};

/// Small-instance decision of the primal: is there a degree-<=t polynomial
/// of weight <= W within gamma of OR_d on all of H_{d,k}?
inline PrimalResult primal_feasibility(int d, int k, double gamma, double W, int t,
                                       std::uint64_t set_budget = 200,
                                       std::uint64_t point_budget = 500) {
    const std::uint64_t sets = binomial_sum(d, t);
    const std::uint64_t pts = binomial_sum(d, k);
    if (sets > set_budget || pts > point_budget)
        throw budget_exceeded("primal_feasibility: instance exceeds the tiny-LP budget");

    // Variables: lambda+ (sets), lambda- (sets), then one slack per
    // inequality: weight row, and two rows per ball point.
    const std::size_t S = static_cast<std::size_t>(sets);
    const std::size_t P = static_cast<std::size_t>(pts);
    LpProblem lp;
    lp.cols = 2 * S + 1 + 2 * P;

    std::vector<std::vector<int>> monomials;
    for_each_subset_up_to(d, t, [&](std::span<const int> set) { monomials.emplace_back(set.begin(), set.end()); });

    // Weight: sum(lambda+ + lambda-) + slack = W.
    std::vector<double> row(lp.cols, 0.0);
    for (std::size_t j = 0; j < 2 * S; ++j) row[j] = 1.0;
    row[2 * S] = 1.0;
    lp.add_row(std::move(row), W);

    // |OR(y) - p(y)| <= gamma as two slacked inequalities per point.
    HammingBall ball{d, k};
    std::size_t point_index = 0;
    ball.for_each([&](std::span<const std::int8_t> y) {
        const double f = or_value(y);
        std::vector<double> hi(lp.cols, 0.0), lo(lp.cols, 0.0);
        for (std::size_t j = 0; j < monomials.size(); ++j) {
            unsigned neg = 0;
            for (int i : monomials[j]) neg ^= (y[static_cast<std::size_t>(i)] < 0) ? 1u : 0u;
            const double chi = neg ? -1.0 : 1.0;
            hi[j] = chi;
            hi[S + j] = -chi;
            lo[j] = -chi;
            lo[S + j] = chi;
        }
        hi[2 * S + 1 + 2 * point_index] = 1.0;       // p(y) + slack = f + gamma
        lo[2 * S + 1 + 2 * point_index + 1] = 1.0;   // -p(y) + slack = -f + gamma
        lp.add_row(std::move(hi), f + gamma);
        lp.add_row(std::move(lo), -f + gamma);
        ++point_index;
    });

    LpResult sol = lp_phase_one(lp);
    PrimalResult result;
    result.exists = sol.feasible;
    if (sol.feasible) {
        result.coefficients.resize(S);
        for (std::size_t j = 0; j < S; ++j) result.coefficients[j] = sol.x[j] - sol.x[S + j];
    }
    return result;
}

}  // namespace polydp
