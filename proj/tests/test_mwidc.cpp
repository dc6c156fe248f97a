#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "polydp/mwidc.hpp"
#include "test_support.hpp"

using namespace polydp;
using polydp::testing::random_point;
using polydp::testing::random_poly;

TEST_CASE("uniform initial vector represents the zero polynomial") {
    PBarVector p = init_pbar(1, 1);
    REQUIRE(p.v.size() == 5);  // 2 C(1,<=1) + 1
    for (double x : p.v) CHECK(x == Catch::Approx(0.2));
    CHECK(p.l1() == Catch::Approx(1.0));

    std::mt19937_64 rng(2);
    MonomialIndexSpace space(6, 2);
    PBarVector uniform = init_pbar(space);
    for (int trial = 0; trial < 50; ++trial) {
        auto y = random_point(rng, 6);
        YBarVector ybar = encode_query(y, space);
        CHECK(pbar_answer(uniform, ybar, 3.0) == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("vector length guard") {
    CHECK_THROWS_AS(MonomialIndexSpace(64, 32), budget_exceeded);
    CHECK_THROWS_AS(MonomialIndexSpace(40, 10, 1000), budget_exceeded);
}

TEST_CASE("encode_poly formula cases") {
    MonomialIndexSpace space(2, 1);  // sets: {}, {0}, {1}

    SparsePoly y1 = SparsePoly::monomial(2, {0}, 1.0);
    PBarVector p = encode_poly(y1, 1.0, space);
    const std::uint64_t r = space.rank_of(std::vector<int>{0});
    CHECK(p.v[MonomialIndexSpace::positive_slot(r)] == Catch::Approx(1.0));
    CHECK(p.v[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(p.l1() == Catch::Approx(1.0));

    PBarVector q = encode_poly(y1.scaled(-0.5), 1.0, space);
    CHECK(q.v[MonomialIndexSpace::negative_slot(r)] == Catch::Approx(0.5));
    CHECK(q.v[0] == Catch::Approx(0.5));

    CHECK_THROWS_AS(encode_poly(y1.scaled(3.0), 1.0, space), std::invalid_argument);  // weight
    SparsePoly deep = SparsePoly::monomial(2, {0, 1}, 0.5);
    CHECK_THROWS_AS(encode_poly(deep, 1.0, space), std::invalid_argument);  // degree
}

TEST_CASE("encode_query layout and symmetry") {
    MonomialIndexSpace space(2, 1);
    std::vector<std::int8_t> y{-1, 1};
    YBarVector ybar = encode_query(y, space);
    CHECK(ybar.v[0] == 0);
    const std::uint64_t rc = space.rank_of(std::vector<int>{});
    const std::uint64_t r0 = space.rank_of(std::vector<int>{0});
    const std::uint64_t r1 = space.rank_of(std::vector<int>{1});
    CHECK(ybar.v[MonomialIndexSpace::positive_slot(rc)] == 1);
    CHECK(ybar.v[MonomialIndexSpace::positive_slot(r0)] == -1);
    CHECK(ybar.v[MonomialIndexSpace::negative_slot(r0)] == 1);
    CHECK(ybar.v[MonomialIndexSpace::positive_slot(r1)] == 1);
    for (std::uint64_t s = 0; s < space.set_count(); ++s)
        CHECK(ybar.v[MonomialIndexSpace::positive_slot(s)] ==
              -ybar.v[MonomialIndexSpace::negative_slot(s)]);
}

TEST_CASE("encoding round trip: W<pbar, ybar> = p(y)") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 2 + static_cast<int>(rng() % 7);  // up to 8
        const int t = std::min(d, 1 + static_cast<int>(rng() % 3));
        const double W = 1.0 + static_cast<double>(rng() % 4);
        MonomialIndexSpace space(d, t);
        SparsePoly p = random_poly(rng, d, t, W, 5);
        PBarVector pbar = encode_poly(p, W, space);
        auto y = random_point(rng, d);
        YBarVector ybar = encode_query(y, space);
        REQUIRE(pbar_answer(pbar, ybar, W) == Catch::Approx(p.evaluate(y)).margin(1e-9));
        REQUIRE(std::abs(pbar_answer(pbar, ybar, W)) <= W + 1e-9);
    }
}

TEST_CASE("kl divergence basics") {
    MonomialIndexSpace space(4, 1);
    PBarVector uniform = init_pbar(space);
    CHECK(kl_divergence(uniform, uniform) == Catch::Approx(0.0).margin(1e-12));

    // Point mass against uniform reaches the ln(2 C + 1) potential start.
    PBarVector point = uniform;
    for (double& x : point.v) x = 0.0;
    point.v[1] = 1.0;
    CHECK(kl_divergence(point, uniform) ==
          Catch::Approx(std::log(static_cast<double>(space.entries()))));

    std::mt19937_64 rng(3);
    SparsePoly p = random_poly(rng, 4, 1, 2.0, 3);
    PBarVector q = encode_poly(p, 2.0, space);
    CHECK(kl_divergence(q, uniform) >= -1e-12);
}

TEST_CASE("mistake bound formula") {
    CHECK(mistake_bound(1.0, 1, 1, 1.0) == 26);  // ceil(16 ln 5)

    // Doubling alpha quarters the pre-ceiling bound.
    const double b1 = 16.0 * std::log(2.0 * static_cast<double>(binomial_sum(10, 2)) + 1.0);
    CHECK(mistake_bound(1.0, 10, 2, 1.0) == static_cast<std::uint64_t>(std::ceil(b1)));
    CHECK(mistake_bound(1.0, 10, 2, 0.5) == static_cast<std::uint64_t>(std::ceil(4.0 * b1)));

    CHECK(mistake_bound(2.0, 8, 2, 0.1) > mistake_bound(1.0, 8, 2, 0.1));
    CHECK(mistake_bound(1.0, 9, 2, 0.1) > mistake_bound(1.0, 8, 2, 0.1));
    CHECK(mistake_bound(1.0, 8, 3, 0.1) > mistake_bound(1.0, 8, 2, 0.1));
}

TEST_CASE("update direction and simplex preservation") {
    std::mt19937_64 rng(29);
    MonomialIndexSpace space(6, 2);
    IdcState state = make_idc_state(space, 2.0, 0.2, 1000);

    for (int step = 0; step < 200; ++step) {
        auto y = random_point(rng, 6);
        YBarVector ybar = encode_query(y, space);
        const double guess = pbar_answer(state.pbar, ybar, state.W);
        const bool go_down = rng() & 1;
        const double a = go_down ? guess - 1.0 : guess + 1.0;
        mw_update(state, ybar, a);
        const double after = pbar_answer(state.pbar, ybar, state.W);
        if (go_down)
            REQUIRE(after < guess);
        else
            REQUIRE(after > guess);
        REQUIRE(state.pbar.l1() == Catch::Approx(1.0).margin(1e-9));
        for (double x : state.pbar.v) REQUIRE(x >= 0.0);
    }
}

TEST_CASE("tie updates take the else branch") {
    MonomialIndexSpace space(3, 1);
    IdcState state = make_idc_state(space, 1.0, 0.2, 10);
    std::vector<std::int8_t> y{-1, 1, 1};
    YBarVector ybar = encode_query(y, space);
    const double guess = pbar_answer(state.pbar, ybar, 1.0);
    mw_update(state, ybar, guess);  // a == guess: r-bar = -y-bar, answer pulled up
    CHECK(pbar_answer(state.pbar, ybar, 1.0) > guess);
}

TEST_CASE("single-step potential drop on a constructed mistake") {
    const double W = 1.0, alpha = 0.5;
    MonomialIndexSpace space(4, 1);
    SparsePoly target = SparsePoly::monomial(4, {0}, 0.9);
    PBarVector target_bar = encode_poly(target, W, space);

    IdcState state = make_idc_state(space, W, alpha, 100);
    std::vector<std::int8_t> y{-1, 1, 1, 1};  // target(y) = -0.9, initial guess 0
    YBarVector ybar = encode_query(y, space);
    REQUIRE(std::abs(pbar_answer(state.pbar, ybar, W) - target.evaluate(y)) > alpha);

    const double before = kl_divergence(target_bar, state.pbar);
    mw_update(state, ybar, target.evaluate(y));
    const double after = kl_divergence(target_bar, state.pbar);
    CHECK(before - after >= alpha * alpha / (16.0 * W * W) - 1e-9);
}

TEST_CASE("mistake cap is enforced") {
    MonomialIndexSpace space(3, 1);
    IdcState state = make_idc_state(space, 1.0, 0.2, 2);
    std::vector<std::int8_t> y{-1, 1, 1};
    YBarVector ybar = encode_query(y, space);
    mw_update(state, ybar, 0.9);
    mw_update(state, ybar, 0.9);
    CHECK_THROWS_AS(mw_update(state, ybar, 0.9), mistake_cap_exceeded);
}

TEST_CASE("honest adversarial streams respect the mistake bound") {
    std::mt19937_64 rng(101);
    const int d = 10, t = 2;
    MonomialIndexSpace space(d, t);

    // Precompute the encodings of the full query cube once.
    std::vector<YBarVector> queries;
    std::vector<std::vector<std::int8_t>> points;
    for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
        std::vector<std::int8_t> y(d);
        for (int i = 0; i < d; ++i) y[static_cast<std::size_t>(i)] = (mask >> i & 1) ? -1 : 1;
        queries.push_back(encode_query(y, space));
        points.push_back(std::move(y));
    }

    for (double W : {1.0, 2.0, 4.0}) {
        for (double alpha : {0.1, 0.25}) {
            const std::uint64_t bound = mistake_bound(W, d, t, alpha);
            for (int stream = 0; stream < 5; ++stream) {
                SparsePoly hidden = random_poly(rng, d, t, W, 8);
                PBarVector hidden_bar = encode_poly(hidden, W, space);
                std::vector<double> truth(points.size());
                for (std::size_t i = 0; i < points.size(); ++i) truth[i] = hidden.evaluate(points[i]);

                IdcState state = make_idc_state(space, W, alpha, bound);
                while (true) {
                    // The adversary picks the worst remaining query.
                    std::size_t worst = points.size();
                    double worst_err = alpha;
                    for (std::size_t i = 0; i < points.size(); ++i) {
                        double err = std::abs(pbar_answer(state.pbar, queries[i], W) - truth[i]);
                        if (err > worst_err) {
                            worst_err = err;
                            worst = i;
                        }
                    }
                    if (worst == points.size()) break;
                    const double before = kl_divergence(hidden_bar, state.pbar);
                    mw_update(state, queries[worst], truth[worst]);
                    const double after = kl_divergence(hidden_bar, state.pbar);
                    REQUIRE(before - after >= alpha * alpha / (16.0 * W * W) - 1e-9);
                    REQUIRE(state.mistakes <= bound);
                }
                REQUIRE(state.mistakes <= bound);
            }
        }
    }
}

TEST_CASE("state snapshot round trip") {
    std::mt19937_64 rng(7);
    MonomialIndexSpace space(5, 2);
    IdcState state = make_idc_state(space, 2.5, 0.1, 500);
    for (int i = 0; i < 10; ++i) {
        auto y = random_point(rng, 5);
        YBarVector ybar = encode_query(y, space);
        mw_update(state, ybar, (i % 2) ? 0.8 : -0.3);
    }

    std::stringstream ss;
    save_state(ss, state);
    IdcState loaded = load_state(ss);
    CHECK(loaded.W == state.W);
    CHECK(loaded.alpha == state.alpha);
    CHECK(loaded.mistakes == state.mistakes);
    CHECK(loaded.cap == state.cap);
    REQUIRE(loaded.pbar.v.size() == state.pbar.v.size());
    for (std::size_t i = 0; i < state.pbar.v.size(); ++i)
        REQUIRE(loaded.pbar.v[i] == Catch::Approx(state.pbar.v[i]).margin(1e-15));

    std::stringstream bad("not-a-state\n");
    CHECK_THROWS_AS(load_state(bad), parse_error);
}
