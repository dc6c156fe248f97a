#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "polydp/combin.hpp"
#include "polydp/errors.hpp"
#include "polydp/univariate.hpp"

namespace polydp {

/// A monomial chi_S(y) = prod_{i in S} y_i, stored as the sorted list of
/// 0-based variable indices. The empty monomial is the constant term.
using Monomial = std::vector<int>;

/// Canonical monomial order: by degree, then lexicographically.
struct GradedLexLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        if (a.size() != b.size()) return a.size() < b.size();
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    }
};

/// Coefficients with magnitude at or below this threshold are dropped
/// after arithmetic so the sparse invariant (no stored zeros) survives
/// floating-point cancellation.
inline constexpr double kCoefficientPruneThreshold = 1e-15;

/// Sparse multilinear real polynomial over {-1, 1}^d in the parity basis:
/// p(y) = sum_S c_S prod_{i in S} y_i. Products reduce by y_i^2 = 1, so
/// multiplication merges index sets by symmetric difference. Immutable in
/// spirit: operations return new values and never mutate shared state.
class SparsePoly {
  public:
    explicit SparsePoly(int dimension) : dim_(dimension) {
        if (dimension < 0) throw std::invalid_argument("SparsePoly: negative dimension");
    }

    static SparsePoly constant(int dimension, double value) {
        SparsePoly p(dimension);
        p.set_coefficient({}, value);
        return p;
    }

    static SparsePoly monomial(int dimension, Monomial m, double value) {
        SparsePoly p(dimension);
        p.set_coefficient(std::move(m), value);
        return p;
    }

    int dimension() const { return dim_; }
    std::size_t term_count() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }

    int degree() const {
        int deg = 0;
        for (const auto& [mono, c] : terms_) deg = std::max(deg, static_cast<int>(mono.size()));
        return deg;
    }

    /// w(p) = sum_S |c_S|.
    double weight() const {
        double w = 0.0;
        for (const auto& [mono, c] : terms_) w += std::abs(c);
        return w;
    }

    /// w*(p): weight excluding the constant term.
    double nonconstant_weight() const {
        double w = 0.0;
        for (const auto& [mono, c] : terms_)
            if (!mono.empty()) w += std::abs(c);
        return w;
    }

    double coefficient(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? 0.0 : it->second;
    }

    /// Stores c_S exactly; a zero value erases the term.
    void set_coefficient(Monomial m, double value) {
        check_monomial(m);
        if (value == 0.0) {
            terms_.erase(m);
        } else {
            terms_[std::move(m)] = value;
        }
    }

    void add_to_coefficient(const Monomial& m, double value) {
        check_monomial(m);
        auto [it, inserted] = terms_.try_emplace(m, 0.0);
        it->second += value;
        if (std::abs(it->second) <= kCoefficientPruneThreshold) terms_.erase(it);
    }

    const std::map<Monomial, double, GradedLexLess>& terms() const { return terms_; }

    /// p(y) for y in {-1, +1}^d.
    double evaluate(std::span<const std::int8_t> y) const {
        if (static_cast<int>(y.size()) != dim_)
            throw std::invalid_argument("SparsePoly::evaluate: dimension mismatch");
        double acc = 0.0;
        for (const auto& [mono, c] : terms_) {
            unsigned neg = 0;
            for (int i : mono) neg ^= (y[static_cast<std::size_t>(i)] < 0) ? 1u : 0u;
            acc += neg ? -c : c;
        }
        return acc;
    }

    SparsePoly operator+(const SparsePoly& o) const {
        require_same_dimension(o);
        SparsePoly r = *this;
        for (const auto& [mono, c] : o.terms_) r.add_to_coefficient(mono, c);
        return r;
    }

    SparsePoly operator-(const SparsePoly& o) const {
        require_same_dimension(o);
        SparsePoly r = *this;
        for (const auto& [mono, c] : o.terms_) r.add_to_coefficient(mono, -c);
        return r;
    }

    SparsePoly scaled(double s) const {
        SparsePoly r(dim_);
        if (s == 0.0) return r;
        for (const auto& [mono, c] : terms_) {
            double v = c * s;
            if (std::abs(v) > kCoefficientPruneThreshold) r.terms_[mono] = v;
        }
        return r;
    }

    /// Multilinear product: chi_S * chi_T = chi_{S xor T}. `term_cap`
    /// bounds the intermediate term count; exceeding it raises
    /// budget_exceeded, which callers treat as "evaluate unexpanded".
    SparsePoly multiply(const SparsePoly& o, std::size_t term_cap = kDefaultTermCap) const {
        require_same_dimension(o);
        SparsePoly r(dim_);
        Monomial merged;
        for (const auto& [ma, ca] : terms_) {
            for (const auto& [mb, cb] : o.terms_) {
                merged.clear();
                std::set_symmetric_difference(ma.begin(), ma.end(), mb.begin(), mb.end(),
                                              std::back_inserter(merged));
                auto [it, inserted] = r.terms_.try_emplace(merged, 0.0);
                it->second += ca * cb;
                if (r.terms_.size() > term_cap)
                    throw budget_exceeded("SparsePoly::multiply: expansion exceeds term cap");
            }
        }
        r.prune();
        return r;
    }

    SparsePoly operator*(const SparsePoly& o) const { return multiply(o); }

    /// Writes the line-oriented text form: one `i,j,... : coefficient`
    /// line per term in canonical order, `const` for the empty monomial.
    /// Indices are 1-based on the wire.
    void to_text(std::ostream& os) const {
        os.precision(17);
        for (const auto& [mono, c] : terms_) {
            if (mono.empty()) {
                os << "const";
            } else {
                for (std::size_t i = 0; i < mono.size(); ++i) {
                    if (i) os << ',';
                    os << mono[i] + 1;
                }
            }
            os << " : " << c << '\n';
        }
    }

    std::string to_text() const {
        std::ostringstream oss;
        to_text(oss);
        return oss.str();
    }

    static SparsePoly from_text(std::istream& is, int dimension) {
        SparsePoly p(dimension);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            auto colon = line.find(':');
            if (colon == std::string::npos) throw parse_error("SparsePoly: missing ':' in term line");
            std::string head = line.substr(0, colon);
            Monomial mono;
            if (head.find("const") == std::string::npos) {
                std::istringstream hs(head);
                std::string tok;
                while (std::getline(hs, tok, ',')) {
                    std::size_t pos = 0;
                    int idx = std::stoi(tok, &pos);
                    mono.push_back(idx - 1);
                }
                std::sort(mono.begin(), mono.end());
            }
            double value = std::stod(line.substr(colon + 1));
            p.add_to_coefficient(mono, value);
        }
        return p;
    }

    static constexpr std::size_t kDefaultTermCap = 1u << 22;

  private:
    void check_monomial(const Monomial& m) const {
        int prev = -1;
        for (int i : m) {
            if (i <= prev || i >= dim_) throw std::invalid_argument("SparsePoly: bad monomial index set");
            prev = i;
        }
    }

    void require_same_dimension(const SparsePoly& o) const {
        if (dim_ != o.dim_) throw std::invalid_argument("SparsePoly: dimension mismatch");
    }

    void prune() {
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (std::abs(it->second) <= kCoefficientPruneThreshold)
                it = terms_.erase(it);
            else
                ++it;
        }
    }

    int dim_ = 0;
    std::map<Monomial, double, GradedLexLess> terms_;
};

/// The exact OR polynomial p_d(x) = 2 prod (1+x_i)/2 - 1, fully expanded:
/// coefficient 2^{1-d} on every nonempty S and 2^{1-d} - 1 on the
/// constant. Evaluates to -1 iff some input is -1 (-1 encodes TRUE);
/// weight is 3 - 2^{2-d} <= 3.
inline SparsePoly exact_or(int d) {
    if (d < 1) throw std::invalid_argument("exact_or: d must be >= 1");
    if (d > 26) throw budget_exceeded("exact_or: 2^d terms exceed what this helper will expand");
    SparsePoly p(d);
    const double c = std::ldexp(1.0, 1 - d);  // 2^{1-d}
    p.set_coefficient({}, c - 1.0);
    std::vector<int> scratch;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << d); ++mask) {
        scratch.clear();
        for (int i = 0; i < d; ++i)
            if (mask >> i & 1) scratch.push_back(i);
        p.set_coefficient(scratch, c);
    }
    return p;
}

/// Fully expands 1 - 2 q(m - sum_i inners_i(y)) over {-1,1}^d. The inner
/// polynomials must live in the same d-dimensional space (typically over
/// pairwise disjoint variables). Degree never exceeds
/// deg(q) * max_i deg(inners_i) before multilinear reduction.
inline SparsePoly compose_affine(const UniPoly& q, int block_count,
                                 std::span<const SparsePoly> inners,
                                 std::size_t term_cap = SparsePoly::kDefaultTermCap) {
    if (inners.empty()) throw std::invalid_argument("compose_affine: no inner polynomials");
    const int d = inners.front().dimension();
    SparsePoly affine = SparsePoly::constant(d, static_cast<double>(block_count));
    for (const SparsePoly& inner : inners) affine = affine - inner;

    // Horner's rule in the sparse ring.
    SparsePoly acc = SparsePoly::constant(d, q.coefficient(q.degree()));
    for (int i = q.degree() - 1; i >= 0; --i) {
        acc = acc.multiply(affine, term_cap);
        acc.add_to_coefficient({}, q.coefficient(i));
    }
    SparsePoly result = SparsePoly::constant(d, 1.0);
    return result - acc.scaled(2.0);
}

}  // namespace polydp
