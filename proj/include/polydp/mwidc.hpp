#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "polydp/combin.hpp"
#include "polydp/errors.hpp"
#include "polydp/sparse_poly.hpp"

namespace polydp {

/// Index layout shared by the simplex vector p-bar and the query vector
/// y-bar: slot 0 is the slack entry; the j-th monomial set S_j (graded
/// lex over subsets of {0..dims-1} with |S| <= degree) owns slots
/// 1 + 2j for (S, +) and 2 + 2j for (S, -).
class MonomialIndexSpace {
  public:
    MonomialIndexSpace(int dims, int degree, std::uint64_t entry_cap = kDefaultEntryCap)
        : dims_(dims), degree_(degree), set_count_(binomial_sum(dims, degree)) {
        if (dims < 1 || degree < 0) throw std::invalid_argument("MonomialIndexSpace: bad dims/degree");
        if (set_count_ >= kCountSaturated || entries() > entry_cap)
            throw budget_exceeded("MonomialIndexSpace: vector length 2*C(dims,<=t)+1 exceeds the entry cap");
    }

    int dims() const { return dims_; }
    int degree() const { return degree_; }
    std::uint64_t set_count() const { return set_count_; }
    std::uint64_t entries() const { return 2 * set_count_ + 1; }

    /// Streams (rank, set) pairs in canonical order without materializing
    /// the set list.
    template <class F>
    void for_each_set(F&& fn) const {
        std::uint64_t rank = 0;
        for_each_subset_up_to(dims_, degree_, [&](std::span<const int> set) { fn(rank++, set); });
    }

    std::uint64_t rank_of(std::span<const int> set) const { return subset_rank(set, dims_); }

    static std::uint64_t positive_slot(std::uint64_t set_rank) { return 1 + 2 * set_rank; }
    static std::uint64_t negative_slot(std::uint64_t set_rank) { return 2 + 2 * set_rank; }

    static constexpr std::uint64_t kDefaultEntryCap = std::uint64_t{1} << 26;

  private:
    int dims_;
    int degree_;
    std::uint64_t set_count_;
};

/// Simplex encoding of a weight-W degree-t polynomial: nonnegative
/// entries, L1 norm 1, coefficient c_S split into positive and negative
/// parts divided by W, slot 0 absorbing the slack.
struct PBarVector {
    MonomialIndexSpace space;
    std::vector<double> v;

    double l1() const {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        return s;
    }
};

/// Query-side encoding: slot 0 holds 0, (S,+) holds chi_S(y) and (S,-)
/// holds -chi_S(y).
struct YBarVector {
    MonomialIndexSpace space;
    std::vector<std::int8_t> v;
};

/// Uniform vector 1/(2*C(dims,<=t)+1): represents the constant 0
/// polynomial because paired entries cancel.
inline PBarVector init_pbar(const MonomialIndexSpace& space) {
    PBarVector p{space, std::vector<double>(space.entries(), 1.0 / static_cast<double>(space.entries()))};
    return p;
}

inline PBarVector init_pbar(int dims, int degree,
                            std::uint64_t entry_cap = MonomialIndexSpace::kDefaultEntryCap) {
    return init_pbar(MonomialIndexSpace(dims, degree, entry_cap));
}

/// Encodes p with scale W: p-bar_S = max(0, c_S)/W, p-bar_{not S} =
/// max(0, -c_S)/W, slot 0 chosen so the L1 norm is exactly 1. Requires
/// weight(p) <= W and degree(p) <= t.
inline PBarVector encode_poly(const SparsePoly& p, double W, const MonomialIndexSpace& space) {
    if (p.dimension() != space.dims()) throw std::invalid_argument("encode_poly: dimension mismatch");
    if (p.degree() > space.degree()) throw std::invalid_argument("encode_poly: degree exceeds the cap");
    if (W <= 0.0) throw std::invalid_argument("encode_poly: W must be positive");
    if (p.weight() > W * (1.0 + 1e-12)) throw std::invalid_argument("encode_poly: weight exceeds W");

    PBarVector out{space, std::vector<double>(space.entries(), 0.0)};
    double mass = 0.0;
    for (const auto& [mono, c] : p.terms()) {
        std::uint64_t r = space.rank_of(mono);
        if (c >= 0.0)
            out.v[MonomialIndexSpace::positive_slot(r)] = c / W;
        else
            out.v[MonomialIndexSpace::negative_slot(r)] = -c / W;
        mass += std::abs(c) / W;
    }
    out.v[0] = std::max(0.0, 1.0 - mass);
    return out;
}

inline YBarVector encode_query(std::span<const std::int8_t> y, const MonomialIndexSpace& space) {
    if (static_cast<int>(y.size()) != space.dims())
        throw std::invalid_argument("encode_query: dimension mismatch");
    YBarVector out{space, std::vector<std::int8_t>(space.entries(), 0)};
    space.for_each_set([&](std::uint64_t rank, std::span<const int> set) {
        unsigned neg = 0;
        for (int i : set) neg ^= (y[static_cast<std::size_t>(i)] < 0) ? 1u : 0u;
        std::int8_t chi = neg ? -1 : 1;
        out.v[MonomialIndexSpace::positive_slot(rank)] = chi;
        out.v[MonomialIndexSpace::negative_slot(rank)] = static_cast<std::int8_t>(-chi);
    });
    return out;
}

/// W <p-bar, y-bar> = p(y).
inline double pbar_answer(const PBarVector& pbar, const YBarVector& ybar, double W) {
    if (pbar.v.size() != ybar.v.size()) throw std::invalid_argument("pbar_answer: layout mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < pbar.v.size(); ++i) dot += pbar.v[i] * ybar.v[i];
    return W * dot;
}

/// KL(target || p) with the 0 log(0/x) = 0 convention; natural log.
inline double kl_divergence(const PBarVector& target, const PBarVector& p) {
    if (target.v.size() != p.v.size()) throw std::invalid_argument("kl_divergence: layout mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < target.v.size(); ++i) {
        if (target.v[i] > 0.0) kl += target.v[i] * std::log(target.v[i] / p.v[i]);
    }
    return kl;
}

/// ceil(16 W^2 ln(2 C(dims,<=t) + 1) / alpha^2), saturating. Natural log
/// throughout: the KL potential starts at ln(2 C + 1) and every mistake
/// costs at least alpha^2 / 16 W^2 of it.
inline std::uint64_t mistake_bound(double W, int dims, int t, double alpha) {
    if (W <= 0.0 || alpha <= 0.0) throw std::invalid_argument("mistake_bound: W and alpha must be positive");
    std::uint64_t sets = binomial_sum(dims, t);
    double entries = 2.0 * static_cast<double>(sets) + 1.0;
    double b = 16.0 * W * W * std::log(entries) / (alpha * alpha);
    if (!(b < static_cast<double>(kCountSaturated))) return kCountSaturated;
    return static_cast<std::uint64_t>(std::ceil(b));
}

/// Multiplicative-weights state over the coefficient simplex.
struct IdcState {
    PBarVector pbar;
    double W = 1.0;
    double alpha = 0.0;
    double eta = 0.0;  // alpha / 4W
    std::uint64_t mistakes = 0;
    std::uint64_t cap = 0;
};

inline IdcState make_idc_state(const MonomialIndexSpace& space, double W, double alpha,
                               std::uint64_t cap) {
    if (W <= 0.0 || alpha <= 0.0) throw std::invalid_argument("make_idc_state: W and alpha must be positive");
    return IdcState{init_pbar(space), W, alpha, alpha / (4.0 * W), 0, cap};
}

/// One mistake update. The caller certifies a mistake happened and that
/// `answer` is within alpha/2 of the truth; this routine then moves the
/// represented polynomial toward `answer`: r-bar = y-bar when the guess
/// overshoots (answer < W<p,y>), else -y-bar (ties included), each entry
/// scaled by exp(-eta r-bar) and the vector renormalized.
inline void mw_update(IdcState& state, const YBarVector& ybar, double answer) {
    if (state.mistakes >= state.cap)
        throw mistake_cap_exceeded("mw_update: mistake cap B = " + std::to_string(state.cap) +
                                   " already consumed");
    const double guess = pbar_answer(state.pbar, ybar, state.W);
    const int direction = answer < guess ? 1 : -1;  // r-bar = direction * y-bar
    const double up = std::exp(state.eta);          // applied where r-bar entry is -1
    const double down = std::exp(-state.eta);
    double norm = 0.0;
    for (std::size_t i = 0; i < state.pbar.v.size(); ++i) {
        int r = direction * ybar.v[i];
        if (r > 0)
            state.pbar.v[i] *= down;
        else if (r < 0)
            state.pbar.v[i] *= up;
        norm += state.pbar.v[i];
    }
    for (double& x : state.pbar.v) x /= norm;
    ++state.mistakes;
}

/// Text snapshot of the full state, for resumable sessions.
inline void save_state(std::ostream& os, const IdcState& state) {
    os << "polydp-state-v1\n";
    os.precision(17);
    os << state.pbar.space.dims() << ' ' << state.pbar.space.degree() << ' ' << state.W << ' '
       << state.alpha << ' ' << state.mistakes << ' ' << state.cap << '\n';
    for (double x : state.pbar.v) os << x << '\n';
}

inline IdcState load_state(std::istream& is,
                           std::uint64_t entry_cap = MonomialIndexSpace::kDefaultEntryCap) {
    std::string magic;
    if (!(is >> magic) || magic != "polydp-state-v1") throw parse_error("load_state: bad header");
    int dims, degree;
    double W, alpha;
    std::uint64_t mistakes, cap;
    if (!(is >> dims >> degree >> W >> alpha >> mistakes >> cap))
        throw parse_error("load_state: bad parameter line");
    MonomialIndexSpace space(dims, degree, entry_cap);
    IdcState state = make_idc_state(space, W, alpha, cap);
    state.mistakes = mistakes;
    for (double& x : state.pbar.v)
        if (!(is >> x)) throw parse_error("load_state: truncated vector");
    return state;
}

}  // namespace polydp
