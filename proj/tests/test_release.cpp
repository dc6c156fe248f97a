#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "polydp/release.hpp"

using namespace polydp;

namespace {

Database bernoulli_db(std::uint64_t seed, int d, std::size_t n, double density = 0.5) {
    std::vector<std::string> names;
    for (int i = 0; i < d; ++i) names.push_back("c" + std::to_string(i));
    Database db(names, n);
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(d));
    for (std::size_t r = 0; r < n; ++r) {
        for (auto& b : bits) b = (uniform_unit(rng) < density) ? 1 : 0;
        db.add_row(bits);
    }
    return db;
}

}  // namespace

TEST_CASE("noise calibration composes to the privacy budget") {
    const double eps = 1.0, delta = 1e-6;
    const std::uint64_t B = 144, n = 50000;
    NoiseScales s = calibrate_noise(eps, delta, B, n);

    CHECK(s.compare > 0.0);
    CHECK(s.threshold == Catch::Approx(s.compare / 2.0));
    CHECK(s.answer == Catch::Approx(2.0 * s.compare));  // the pinned 2x ratio
    CHECK(s.eps_answer_event == Catch::Approx(s.eps_svt_event / 8.0));

    // Recompute the advanced-composition total from the per-event costs.
    const double e1 = s.eps_svt_event, e2 = s.eps_answer_event;
    const double total = std::sqrt(2.0 * std::log(1.0 / delta) *
                                   static_cast<double>(B) * (e1 * e1 + e2 * e2)) +
                         static_cast<double>(B) *
                             (e1 * (std::exp(e1) - 1.0) + e2 * (std::exp(e2) - 1.0));
    CHECK(total <= eps + 1e-9);
    CHECK(total >= 0.95 * eps);  // the search does not leave budget on the table

    // Scales follow 1/(n eps) and sqrt(B) shapes.
    NoiseScales s2 = calibrate_noise(2.0 * eps, delta, B, n);
    CHECK(s2.compare < s.compare);
    NoiseScales s3 = calibrate_noise(eps, delta, 4 * B, n);
    CHECK(s3.compare > 1.8 * s.compare);
    CHECK(s3.compare < 2.2 * s.compare);
}

TEST_CASE("required database size formula") {
    PrivacyParams p;
    p.alpha = 1.0;
    p.beta = std::exp(-1.0);
    p.delta = std::exp(-1.0);
    p.epsilon = 1.0;
    const std::uint64_t ell = 3;  // ln(ell/beta) = ln(3e)
    const double expected = 128.0 * 1.0 * std::log(3.0 * std::exp(1.0)) *
                            std::log(4.0 * std::exp(1.0)) *
                            std::sqrt(std::log(2.0 * 2.0 + 1.0));
    CHECK(required_database_size(p, 1.0, 1, 1, ell) == Catch::Approx(expected));

    PrivacyParams q = p;
    q.epsilon = 2.0;
    CHECK(required_database_size(q, 1.0, 1, 1, ell) == Catch::Approx(expected / 2.0));
    CHECK(required_database_size(p, 2.0, 1, 1, ell) == Catch::Approx(2.0 * expected));
    CHECK(required_database_size(p, 3.0, 1, 1, ell) > required_database_size(p, 2.0, 1, 1, ell));
}

TEST_CASE("laplace sampler moments") {
    std::mt19937_64 rng(42);
    const double scale = 0.7;
    const std::size_t draws = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        double x = laplace(rng, scale);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / static_cast<double>(draws);
    const double var = sumsq / static_cast<double>(draws) - mean * mean;
    CHECK(std::abs(mean) <= 0.02 * scale);
    CHECK(var == Catch::Approx(2.0 * scale * scale).epsilon(0.02));
    CHECK(laplace(rng, 0.0) == 0.0);
}

TEST_CASE("noise-off mechanism emits only certified answers") {
    Database db = bernoulli_db(7, 8, 500);
    PrivacyParams params;
    params.alpha = 0.1;
    ReleaseOptions opt;
    opt.k = 2;
    opt.noise_off = true;
    MechanismState state(db, params, opt);

    auto queries = enumerate_marginals(8, 2);
    for (const Query& q : queries) {
        AnswerRecord rec = state.answer_online(q);
        const double truth = q.true_answer(db);
        REQUIRE(rec.answer >= 0.0);
        REQUIRE(rec.answer <= 1.0);
        if (rec.noisy)
            REQUIRE(rec.answer == Catch::Approx(truth).margin(1e-12));  // exact truth fed back
        else
            REQUIRE(std::abs(rec.answer - truth) <= state.threshold() + 1e-12);
        REQUIRE(std::abs(rec.answer - truth) <= params.alpha + 1e-12);
    }
    CHECK(state.above_threshold_events() == state.mistakes());
    CHECK(state.contract_violations() == 0);
}

TEST_CASE("fixed seed replays a bit-identical transcript") {
    Database db = bernoulli_db(11, 8, 2000);
    PrivacyParams params;
    params.alpha = 0.05;
    params.epsilon = 1.0;
    params.delta = 1e-6;
    ReleaseOptions opt;
    opt.k = 2;
    opt.seed = 99;
    opt.mistake_budget = 64;

    MechanismState a(db, params, opt);
    MechanismState b(db, params, opt);
    auto ans_a = answer_offline_all(a, 2);
    auto ans_b = answer_offline_all(b, 2);
    REQUIRE(ans_a.size() == ans_b.size());
    for (std::size_t i = 0; i < ans_a.size(); ++i) {
        REQUIRE(ans_a[i].answer == ans_b[i].answer);  // bitwise
        REQUIRE(ans_a[i].noisy == ans_b[i].noisy);
    }

    ReleaseOptions other = opt;
    other.seed = 100;
    MechanismState c(db, params, other);
    auto ans_c = answer_offline_all(c, 2);
    bool any_diff = false;
    for (std::size_t i = 0; i < ans_a.size(); ++i) any_diff |= ans_a[i].answer != ans_c[i].answer;
    CHECK(any_diff);
}

TEST_CASE("offline run equals an online run on the canonical stream") {
    Database db = bernoulli_db(13, 6, 800);
    PrivacyParams params;
    params.alpha = 0.05;
    ReleaseOptions opt;
    opt.k = 2;
    opt.seed = 5;
    opt.mistake_budget = 64;

    MechanismState offline(db, params, opt);
    auto table = answer_offline_all(offline, 2);

    MechanismState online(db, params, opt);
    auto queries = enumerate_marginals(6, 2);
    REQUIRE(table.size() == queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        AnswerRecord rec = online.answer_online(queries[i]);
        REQUIRE(rec.answer == table[i].answer);
        REQUIRE(rec.id == table[i].id);
    }
}

TEST_CASE("canonical marginal enumeration counts and ids") {
    auto queries = enumerate_marginals(12, 2);
    CHECK(queries.size() == 1 + 12 * 2 + 66 * 4);  // sum C(d,j) 2^j
    CHECK(queries[0].id == "q000000");
    CHECK(queries[0].arity() == 0);
    CHECK(queries.back().arity() == 2);

    auto again = enumerate_marginals(12, 2);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        REQUIRE(queries[i].id == again[i].id);
        REQUIRE(queries[i].attrs == again[i].attrs);
        REQUIRE(queries[i].pattern == again[i].pattern);
    }
}

TEST_CASE("query budget and arity are enforced") {
    Database db = bernoulli_db(3, 6, 100);
    PrivacyParams params;
    params.alpha = 0.1;
    params.ell = 2;
    ReleaseOptions opt;
    opt.k = 1;
    opt.noise_off = true;
    MechanismState state(db, params, opt);

    Query q;
    q.id = "a";
    q.kind = Query::Kind::marginal;
    q.attrs = {0};
    q.pattern = {1};
    state.answer_online(q);
    state.answer_online(q);
    CHECK_THROWS_AS(state.answer_online(q), query_budget_exhausted);

    PrivacyParams unlimited;
    unlimited.alpha = 0.1;
    MechanismState state2(db, unlimited, opt);
    Query wide;
    wide.id = "b";
    wide.attrs = {0, 1};
    wide.pattern = {1, 1};
    CHECK_THROWS_AS(state2.answer_online(wide), std::invalid_argument);
}

TEST_CASE("budget exhaustion degrades to guesses and is flagged") {
    Database db = bernoulli_db(17, 8, 1000);
    PrivacyParams params;
    params.alpha = 0.05;
    ReleaseOptions opt;
    opt.k = 2;
    opt.noise_off = true;
    opt.mistake_budget = 5;
    MechanismState state(db, params, opt);

    auto answers = answer_offline_all(state, 2);
    CHECK(state.budget_exhausted());
    CHECK(state.mistakes() == 5);
    CHECK(state.above_threshold_events() == 5);
    for (const auto& rec : answers) {
        REQUIRE(rec.answer >= 0.0);
        REQUIRE(rec.answer <= 1.0);
    }
    CHECK_THROWS_AS(run_to_convergence(state, enumerate_marginals(8, 2)), mistake_cap_exceeded);
}

TEST_CASE("convergence on a tiny instance reaches the maximality state") {
    Database db = bernoulli_db(1, 4, 400);
    PrivacyParams params;
    params.alpha = 0.1;
    ReleaseOptions opt;
    opt.k = 1;
    opt.noise_off = true;
    MechanismState state(db, params, opt);

    auto queries = enumerate_marginals(4, 1);
    std::size_t passes = run_to_convergence(state, queries, 20000);
    CHECK(passes >= 1);
    for (const Query& q : queries)
        REQUIRE(std::abs(state.current_guess(q) - q.true_answer(db)) <=
                state.threshold() + 1e-9);
}

TEST_CASE("summary sampling is unbiased and merges duplicates") {
    Database db = bernoulli_db(1, 4, 400);
    PrivacyParams params;
    params.alpha = 0.1;
    ReleaseOptions opt;
    opt.k = 1;
    opt.noise_off = true;
    MechanismState state(db, params, opt);
    auto queries = enumerate_marginals(4, 1);
    run_to_convergence(state, queries, 20000);

    const IdcState& idc = state.idc();
    std::mt19937_64 probe_rng(77);
    std::vector<std::vector<std::int8_t>> probes;
    for (int i = 0; i < 6; ++i) {
        std::vector<std::int8_t> y(8);
        for (auto& v : y) v = (probe_rng() & 1) ? -1 : 1;
        probes.push_back(std::move(y));
    }

    const std::size_t samples = 64;
    const int reps = 3000;
    std::vector<double> mean(probes.size(), 0.0), sq(probes.size(), 0.0);
    std::mt19937_64 rng(123);
    for (int r = 0; r < reps; ++r) {
        Summary s = sample_summary(idc, samples, 1, 4, rng);
        REQUIRE(s.poly.term_count() <= samples);
        for (std::size_t i = 0; i < probes.size(); ++i) {
            double v = s.poly.evaluate(probes[i]);
            mean[i] += v;
            sq[i] += v * v;
        }
    }
    for (std::size_t i = 0; i < probes.size(); ++i) {
        mean[i] /= reps;
        const double var = sq[i] / reps - mean[i] * mean[i];
        const double se = std::sqrt(var / reps);
        YBarVector ybar = encode_query(probes[i], idc.pbar.space);
        const double target = pbar_answer(idc.pbar, ybar, idc.W);
        REQUIRE(std::abs(mean[i] - target) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("summary answers are post-processing of the polynomial") {
    Database db = bernoulli_db(1, 4, 400);
    PrivacyParams params;
    params.alpha = 0.1;
    ReleaseOptions opt;
    opt.k = 1;
    opt.noise_off = true;
    MechanismState state(db, params, opt);
    Summary s = release_summary(state, 1, 256, 9, 20000);

    for (const Query& q : enumerate_marginals(4, 1)) {
        const double a = evaluate_summary(s, q);
        REQUIRE(a >= 0.0);
        REQUIRE(a <= 1.0);
    }
    CHECK(s.sample_count == 256);
    CHECK(s.dims == 8);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(sample_summary(state.idc(), 0, 1, 4, rng), std::invalid_argument);
}
