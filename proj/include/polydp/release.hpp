#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polydp/database.hpp"
#include "polydp/errors.hpp"
#include "polydp/mwidc.hpp"
#include "polydp/or_approx.hpp"
#include "polydp/random.hpp"

namespace polydp {

struct PrivacyParams {
    double epsilon = 1.0;
    double delta = 1e-6;
    double alpha = 0.05;   // target accuracy
    double beta = 0.01;    // failure probability
    std::uint64_t ell = 0;  // query budget; 0 = set by the offline driver

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacyParams: epsilon must be positive");
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("PrivacyParams: delta in (0,1)");
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("PrivacyParams: alpha in (0,1)");
        if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("PrivacyParams: beta in (0,1)");
    }
};

struct ReleaseOptions {
    int k = 2;
    double weight_cap = 1000.0;            // block-count scan cap
    std::uint64_t mistake_budget = 0;      // 0 = the theoretical bound
    bool noise_off = false;                // testing mode: exact IDC
    std::uint64_t seed = 0;
    std::uint64_t entry_cap = MonomialIndexSpace::kDefaultEntryCap;
    std::size_t expand_term_cap = 200000;  // realized-weight expansion attempt
    std::optional<AmplifierKind> amplifier;  // default: by k
};

struct NoiseScales {
    double threshold = 0.0;  // per-epoch threshold perturbation
    double compare = 0.0;    // per-comparison noise
    double answer = 0.0;     // per-release noise
    double eps_svt_event = 0.0;
    double eps_answer_event = 0.0;
    double effective_c_t = 0.0;
};

/// Calibrates the sparse-vector noise so that B above-threshold epochs
/// (each one AboveThreshold run plus one Laplace answer) compose to
/// (epsilon, delta)-DP under advanced composition. Per epoch the
/// AboveThreshold pair uses threshold scale 2/(n e1) and comparison scale
/// 4/(n e1); the answer release uses scale 1/(n e2) with e2 = e1/8, which
/// pins the answer scale at exactly twice the comparison scale.
inline NoiseScales calibrate_noise(double epsilon, double delta, std::uint64_t budget,
                                   std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("calibrate_noise: empty database");
    if (budget == 0) throw std::invalid_argument("calibrate_noise: zero mistake budget");
    const double B = static_cast<double>(budget);
    const double ln_inv_delta = std::log(1.0 / delta);

    auto total_epsilon = [&](double e1) {
        const double e2 = e1 / 8.0;
        const double sum_sq = B * (e1 * e1 + e2 * e2);
        return std::sqrt(2.0 * ln_inv_delta * sum_sq) +
               B * (e1 * (std::exp(e1) - 1.0) + e2 * (std::exp(e2) - 1.0));
    };

    double lo = 0.0, hi = 1.0;
    while (total_epsilon(hi) < epsilon) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (total_epsilon(mid) <= epsilon ? lo : hi) = mid;
    }
    const double e1 = lo;
    const double e2 = e1 / 8.0;
    const double sensitivity = 1.0 / static_cast<double>(n);

    NoiseScales s;
    s.eps_svt_event = e1;
    s.eps_answer_event = e2;
    s.threshold = 2.0 * sensitivity / e1;
    s.compare = 4.0 * sensitivity / e1;
    s.answer = sensitivity / e2;
    s.effective_c_t = s.compare * epsilon * static_cast<double>(n) /
                      (std::sqrt(8.0 * B) * std::log(4.0 / delta));
    return s;
}

/// The database-size precondition under which the accuracy guarantee
/// holds: n >= 128 W ln(l/beta) ln(4/delta) sqrt(ln(2 C(m,<=t)+1)) /
/// (alpha^2 epsilon). Natural logs throughout.
inline double required_database_size(const PrivacyParams& params, double W, int dims, int t,
                                     std::uint64_t ell) {
    const double entries = 2.0 * static_cast<double>(binomial_sum(dims, t)) + 1.0;
    const double queries = static_cast<double>(std::max<std::uint64_t>(ell, 1));
    return 128.0 * W * std::log(queries / params.beta) * std::log(4.0 / params.delta) *
           std::sqrt(std::log(entries)) / (params.alpha * params.alpha * params.epsilon);
}

struct SizeCheck {
    bool ok = false;
    double required_n = 0.0;
};

inline SizeCheck check_database_size(const PrivacyParams& params, double W, int dims, int t,
                                     std::uint64_t ell, std::uint64_t n) {
    SizeCheck c;
    c.required_n = required_database_size(params, W, dims, t, ell);
    c.ok = static_cast<double>(n) >= c.required_n;
    return c;
}

struct AnswerRecord {
    std::string id;
    double answer = 0.0;
    bool noisy = false;  // true: threshold crossed, perturbed truth released
};

/// One release session: the complement-extended database, the chosen
/// approximation parameters, the simplex state, and the noise machinery.
/// Queries are handled strictly in sequence.
class MechanismState {
  public:
    MechanismState(const Database& db, PrivacyParams params, ReleaseOptions options)
        : d_original_(db.d()),
          dims_(2 * db.d()),
          n_(db.n()),
          params_(params),
          options_(options),
          ext_(extend_with_complements(db)),
          rng_(options.seed) {
        params_.validate();
        if (options_.k < 1 || options_.k > dims_)
            throw std::invalid_argument("MechanismState: k out of range");

        // OR-side accuracy alpha/2: the per-record map f_x = (1 - G)/2
        // halves any OR-side error, so the family is alpha/4-approximated
        // as the mistake bound requires.
        const double gamma_or = params_.alpha / 2.0;
        const int m = choose_block_count(dims_, options_.k, gamma_or, ApproxMode::restricted,
                                         options_.weight_cap);
        spec_ = options_.amplifier
                    ? build_restricted_approx(dims_, options_.k, m, gamma_or, *options_.amplifier)
                    : build_restricted_approx(dims_, options_.k, m, gamma_or);

        degree_cap_ = std::min(spec_.degree_bound, dims_);
        poly_weight_ = spec_.weight_bound;
        expansion_realized_ = false;
        try {
            SparsePoly expanded = expand(spec_, options_.expand_term_cap);
            poly_weight_ = expanded.weight();
            degree_cap_ = std::min(degree_cap_, expanded.degree());
            expansion_realized_ = true;
        } catch (const budget_exceeded&) {
            // Too large to expand: fall back to the recorded bound.
        }
        // Per-record polynomials are (1 - G(y^x))/2; averaging preserves
        // the bound, so the simplex scale W covers f_D's representation.
        W_ = (1.0 + poly_weight_) / 2.0;

        MonomialIndexSpace space = [&] {
            try {
                return MonomialIndexSpace(dims_, degree_cap_, options_.entry_cap);
            } catch (const budget_exceeded&) {
                throw budget_exceeded(
                    "simplex vector 2*C(" + std::to_string(dims_) + ",<=" +
                    std::to_string(degree_cap_) + ")+1 exceeds the entry cap; raise the weight "
                    "cap so a lower-degree block count is chosen, or raise the entry cap");
            }
        }();
        theory_bound_ = mistake_bound(W_, dims_, degree_cap_, params_.alpha);
        budget_ = options_.mistake_budget == 0 ? theory_bound_
                                               : std::min(options_.mistake_budget, theory_bound_);
        idc_ = make_idc_state(space, W_, params_.alpha, budget_);
        threshold_ = 0.75 * params_.alpha;
        if (!options_.noise_off) noise_ = calibrate_noise(params_.epsilon, params_.delta, budget_, n_);
        rho_ = laplace(rng_, noise_.threshold);
    }

    AnswerRecord answer_online(const Query& query) {
        if (params_.ell != 0 && queries_answered_ >= params_.ell)
            throw query_budget_exhausted("answer_online: query budget ell exhausted");
        if (query.arity() > options_.k)
            throw std::invalid_argument("answer_online: query arity exceeds k");

        const DisjunctionIndex y = query.extended_index(d_original_);
        const double truth = true_answer_disjunction(ext_, y);
        const std::vector<std::int8_t> ypm = y.to_pm1();
        const YBarVector ybar = encode_query(ypm, idc_.pbar.space);
        const double guess = pbar_answer(idc_.pbar, ybar, W_);

        const double nu = laplace(rng_, noise_.compare);
        const bool above = std::abs(truth - guess) + nu > threshold_ + rho_;

        double released;
        bool noisy_mode = false;
        if (above && idc_.mistakes < budget_) {
            const double answer_noise = laplace(rng_, noise_.answer);
            if (std::abs(answer_noise) > params_.alpha / 2.0) ++contract_violations_;
            released = clamp01(truth + answer_noise);
            mw_update(idc_, ybar, released);
            rho_ = laplace(rng_, noise_.threshold);  // new sparse-vector epoch
            ++above_threshold_events_;
            noisy_mode = true;
        } else {
            if (above) budget_exhausted_ = true;
            released = clamp01(guess);
        }

        ++queries_answered_;
        max_internal_error_ = std::max(max_internal_error_, std::abs(released - truth));
        const double emitted = query.negated() ? 1.0 - released : released;
        return AnswerRecord{query.id, emitted, noisy_mode};
    }

    /// Evaluates the current polynomial on a query without touching the
    /// database or the privacy state (pure post-processing).
    double current_guess(const Query& query) const {
        const DisjunctionIndex y = query.extended_index(d_original_);
        const std::vector<std::int8_t> ypm = y.to_pm1();
        const YBarVector ybar = encode_query(ypm, idc_.pbar.space);
        const double g = clamp01(pbar_answer(idc_.pbar, ybar, W_));
        return query.negated() ? 1.0 - g : g;
    }

    /// Replaces the simplex state with a loaded snapshot; the snapshot
    /// must match this mechanism's layout and scale. The mistake budget
    /// stays with the mechanism, not the snapshot.
    void adopt_idc(IdcState state) {
        if (state.pbar.space.dims() != dims_ || state.pbar.space.degree() != degree_cap_)
            throw std::invalid_argument("adopt_idc: snapshot layout does not match the mechanism");
        if (std::abs(state.W - W_) > 1e-9 || std::abs(state.alpha - params_.alpha) > 1e-12)
            throw std::invalid_argument("adopt_idc: snapshot scale does not match the mechanism");
        state.cap = budget_;
        idc_ = std::move(state);
    }

    int d_original() const { return d_original_; }
    int dims() const { return dims_; }
    std::uint64_t n() const { return n_; }
    int block_count() const { return spec_.block_count; }
    int degree() const { return degree_cap_; }
    double poly_weight() const { return poly_weight_; }
    bool expansion_realized() const { return expansion_realized_; }
    double W() const { return W_; }
    const ApproxSpec& approx_spec() const { return spec_; }
    const IdcState& idc() const { return idc_; }
    const NoiseScales& noise() const { return noise_; }
    double threshold() const { return threshold_; }
    std::uint64_t theory_bound() const { return theory_bound_; }
    std::uint64_t budget() const { return budget_; }
    std::uint64_t mistakes() const { return idc_.mistakes; }
    std::uint64_t queries_answered() const { return queries_answered_; }
    std::uint64_t above_threshold_events() const { return above_threshold_events_; }
    std::uint64_t contract_violations() const { return contract_violations_; }
    bool budget_exhausted() const { return budget_exhausted_; }
    double max_internal_error() const { return max_internal_error_; }
    const PrivacyParams& params() const { return params_; }
    const ReleaseOptions& options() const { return options_; }

    SizeCheck size_check(std::uint64_t ell) const {
        return check_database_size(params_, W_, dims_, degree_cap_, ell, n_);
    }

  private:
    static double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

    int d_original_;
    int dims_;
    std::uint64_t n_;
    PrivacyParams params_;
    ReleaseOptions options_;
    Database ext_;
    ApproxSpec spec_;
    int degree_cap_ = 0;
    double poly_weight_ = 0.0;
    bool expansion_realized_ = false;
    double W_ = 1.0;
    IdcState idc_{PBarVector{MonomialIndexSpace(1, 0), {}}, 1.0, 1.0, 0.25, 0, 0};
    std::uint64_t theory_bound_ = 0;
    std::uint64_t budget_ = 0;
    NoiseScales noise_;
    double threshold_ = 0.0;
    std::mt19937_64 rng_;
    double rho_ = 0.0;
    std::uint64_t queries_answered_ = 0;
    std::uint64_t above_threshold_events_ = 0;
    std::uint64_t contract_violations_ = 0;
    bool budget_exhausted_ = false;
    double max_internal_error_ = 0.0;
};

/// Canonical stream of every marginal of arity <= k: attribute sets in
/// graded-lex order, patterns in binary counting order; ids are
/// sequential. Count is sum_{j<=k} C(d,j) 2^j.
inline std::vector<Query> enumerate_marginals(int d, int k) {
    std::vector<Query> out;
    std::uint64_t counter = 0;
    for_each_subset_up_to(d, k, [&](std::span<const int> set) {
        const std::size_t s = set.size();
        for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << s); ++pattern) {
            Query q;
            char id[16];
            std::snprintf(id, sizeof id, "q%06llu", static_cast<unsigned long long>(counter++));
            q.id = id;
            q.kind = Query::Kind::marginal;
            q.attrs.assign(set.begin(), set.end());
            for (std::size_t j = 0; j < s; ++j)
                q.pattern.push_back(static_cast<std::uint8_t>(pattern >> j & 1));
            out.push_back(std::move(q));
        }
    });
    return out;
}

/// Offline release: one canonical pass of every k-way marginal through
/// the online mechanism.
inline std::vector<AnswerRecord> answer_offline_all(MechanismState& state, int k) {
    std::vector<AnswerRecord> answers;
    for (const Query& q : enumerate_marginals(state.d_original(), k)) answers.push_back(state.answer_online(q));
    return answers;
}

/// Repeats passes over the canonical stream until one completes with no
/// above-threshold event (the maximal-update-sequence criterion). Throws
/// when the mistake budget runs out first.
inline std::size_t run_to_convergence(MechanismState& state, std::span<const Query> queries,
                                      std::uint64_t max_passes = 0) {
    if (max_passes == 0) max_passes = state.budget() + 1;
    for (std::size_t pass = 1; pass <= max_passes; ++pass) {
        const std::uint64_t before = state.above_threshold_events();
        for (const Query& q : queries) state.answer_online(q);
        if (state.budget_exhausted())
            throw mistake_cap_exceeded(
                "run_to_convergence: mistake budget exhausted before a clean pass; "
                "n is below the accuracy requirement for this budget");
        if (state.above_threshold_events() == before) return pass;
    }
    throw mistake_cap_exceeded("run_to_convergence: no clean pass within the pass limit");
}

/// Compact summary: a sparse polynomial sampled from the converged
/// simplex vector. Sampling index I with probability pbar_I and adding
/// W sign(I) chi_{S(I)} / samples makes every evaluation unbiased for
/// W <pbar, ybar>.
struct Summary {
    SparsePoly poly;
    double W = 0.0;
    std::size_t sample_count = 0;
    int k = 0;
    int dims = 0;
    int d_original = 0;
};

inline Summary sample_summary(const IdcState& idc, std::size_t sample_count, int k, int d_original,
                              std::mt19937_64& rng) {
    if (sample_count == 0) throw std::invalid_argument("sample_summary: need at least one sample");
    const auto& v = idc.pbar.v;
    std::vector<double> cumulative(v.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += v[i];
        cumulative[i] = acc;
    }

    std::vector<std::int64_t> hits(v.size(), 0);
    for (std::size_t s = 0; s < sample_count; ++s) {
        const double u = uniform_unit(rng) * acc;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const std::size_t idx = std::min(v.size() - 1, static_cast<std::size_t>(it - cumulative.begin()));
        ++hits[idx];
    }

    Summary summary{SparsePoly(idc.pbar.space.dims()), idc.W, sample_count, k,
                    idc.pbar.space.dims(), d_original};
    const double unit = idc.W / static_cast<double>(sample_count);
    idc.pbar.space.for_each_set([&](std::uint64_t rank, std::span<const int> set) {
        const std::int64_t net = hits[MonomialIndexSpace::positive_slot(rank)] -
                                 hits[MonomialIndexSpace::negative_slot(rank)];
        if (net != 0)
            summary.poly.add_to_coefficient(Monomial(set.begin(), set.end()),
                                            unit * static_cast<double>(net));
    });
    return summary;
}

/// Converges the mechanism on the canonical stream, then samples.
inline Summary release_summary(MechanismState& state, int k, std::size_t sample_count,
                               std::uint64_t seed_for_sampling, std::uint64_t max_passes = 0) {
    const std::vector<Query> queries = enumerate_marginals(state.d_original(), k);
    run_to_convergence(state, queries, max_passes);
    std::mt19937_64 rng(seed_for_sampling);
    return sample_summary(state.idc(), sample_count, k, state.d_original(), rng);
}

/// Post-processing evaluation of a summary on one query; clamped to [0,1].
inline double evaluate_summary(const Summary& summary, const Query& query) {
    const DisjunctionIndex y = query.extended_index(summary.d_original);
    const std::vector<std::int8_t> ypm = y.to_pm1();
    const double raw = summary.poly.evaluate(ypm);
    const double disj = std::min(1.0, std::max(0.0, raw));
    return query.negated() ? 1.0 - disj : disj;
}

}  // namespace polydp
