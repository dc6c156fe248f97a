#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace polydp {

/// Dense univariate real polynomial c_0 + c_1 x + ... + c_t x^t.
class UniPoly {
  public:
    UniPoly() = default;
    explicit UniPoly(std::vector<double> coefficients) : coef_(std::move(coefficients)) { trim(); }

    static UniPoly zero() { return UniPoly(); }
    static UniPoly constant(double c) { return UniPoly({c}); }

    /// Degree of the polynomial; 0 for the zero polynomial.
    int degree() const { return coef_.empty() ? 0 : static_cast<int>(coef_.size()) - 1; }

    bool is_zero() const { return coef_.empty(); }

    double coefficient(int i) const {
        if (i < 0 || static_cast<std::size_t>(i) >= coef_.size()) return 0.0;
        return coef_[static_cast<std::size_t>(i)];
    }

    std::span<const double> coefficients() const { return coef_; }

    double max_abs_coefficient() const {
        double m = 0.0;
        for (double c : coef_) m = std::max(m, std::abs(c));
        return m;
    }

    /// Horner evaluation.
    double operator()(double x) const {
        double acc = 0.0;
        for (std::size_t i = coef_.size(); i-- > 0;) acc = acc * x + coef_[i];
        return acc;
    }

    UniPoly operator+(const UniPoly& o) const {
        std::vector<double> c(std::max(coef_.size(), o.coef_.size()), 0.0);
        for (std::size_t i = 0; i < coef_.size(); ++i) c[i] += coef_[i];
        for (std::size_t i = 0; i < o.coef_.size(); ++i) c[i] += o.coef_[i];
        return UniPoly(std::move(c));
    }

    UniPoly operator*(const UniPoly& o) const {
        if (coef_.empty() || o.coef_.empty()) return UniPoly();
        std::vector<double> c(coef_.size() + o.coef_.size() - 1, 0.0);
        for (std::size_t i = 0; i < coef_.size(); ++i)
            for (std::size_t j = 0; j < o.coef_.size(); ++j) c[i + j] += coef_[i] * o.coef_[j];
        return UniPoly(std::move(c));
    }

    UniPoly scaled(double s) const {
        std::vector<double> c = coef_;
        for (double& v : c) v *= s;
        return UniPoly(std::move(c));
    }

  private:
    void trim() {
        while (!coef_.empty() && coef_.back() == 0.0) coef_.pop_back();
    }

    std::vector<double> coef_;
};

/// Amplifier q with q(0) = 0 exactly and |q(x) - 1| <= gamma/2 on [1, 2k].
///
/// Construction: with T_t the degree-t Chebyshev polynomial of the first
/// kind and mu(x) = (2x - (2k+1)) / (2k-1) mapping [1, 2k] onto [-1, 1],
/// take q(x) = 1 - T_t(mu(x)) / T_t(mu(0)) for the smallest t such that
/// |T_t(mu(0))| >= 2/gamma. Since |mu(0)| > 1 the denominator grows
/// geometrically, so t = O(sqrt(k) log(1/gamma)).
inline UniPoly chebyshev_amplifier(int k, double gamma) {
    if (k < 1) throw std::invalid_argument("chebyshev_amplifier: k must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("chebyshev_amplifier: gamma must lie in (0,1)");

    const double a = 2.0 / (2.0 * k - 1.0);
    const double b = -(2.0 * k + 1.0) / (2.0 * k - 1.0);  // mu(0), magnitude > 1
    const double target = 2.0 / gamma;

    // Smallest degree with |T_t(mu(0))| >= 2/gamma, by the value recurrence.
    int t = 1;
    {
        double prev = 1.0, cur = b;
        while (std::abs(cur) < target) {
            double next = 2.0 * b * cur - prev;
            prev = cur;
            cur = next;
            ++t;
            if (t > 4096) throw std::invalid_argument("chebyshev_amplifier: degree out of range");
        }
    }

    // T_t(a x + b) as a coefficient vector, by the same three-term recurrence.
    UniPoly prev = UniPoly::constant(1.0);
    UniPoly cur({b, a});
    const UniPoly arg2({2.0 * b, 2.0 * a});
    for (int i = 2; i <= t; ++i) {
        UniPoly next = arg2 * cur + prev.scaled(-1.0);
        prev = std::move(cur);
        cur = std::move(next);
    }

    const double denom = cur(0.0);
    std::vector<double> q(static_cast<std::size_t>(t) + 1, 0.0);
    q[0] = 0.0;  // exact by construction: 1 - T_t(mu(0))/T_t(mu(0))
    for (int i = 1; i <= t; ++i) q[static_cast<std::size_t>(i)] = -cur.coefficient(i) / denom;
    return UniPoly(std::move(q));
}

/// The unique polynomial of degree <= k with q(0) = 0 and q(2i) = 1 for
/// i = 1..k. Exact (rather than gamma-approximate) on the even values the
/// composed block count takes, which is all an OR-of-ORs evaluation ever
/// feeds it.
inline UniPoly interpolation_amplifier(int k) {
    if (k < 1) throw std::invalid_argument("interpolation_amplifier: k must be >= 1");
    if (k > 64) throw std::invalid_argument("interpolation_amplifier: k out of supported range");

    UniPoly q;
    for (int i = 1; i <= k; ++i) {
        // Lagrange basis through the nodes {0, 2, 4, ..., 2k} at node 2i.
        // The (x - 0) factor keeps the constant coefficient exactly zero.
        UniPoly basis({0.0, 1.0});
        double denom = 2.0 * i;
        for (int j = 1; j <= k; ++j) {
            if (j == i) continue;
            basis = basis * UniPoly({-2.0 * j, 1.0});
            denom *= 2.0 * (i - j);
        }
        q = q + basis.scaled(1.0 / denom);
    }
    return q;
}

}  // namespace polydp
