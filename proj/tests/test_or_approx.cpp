#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "polydp/or_approx.hpp"
#include "test_support.hpp"

using namespace polydp;
using polydp::testing::cube_values;
using polydp::testing::walsh_coefficients;

namespace {

double exhaustive_cube_error(const ApproxSpec& spec) {
    double worst = 0.0;
    std::vector<std::int8_t> y(static_cast<std::size_t>(spec.dimension));
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << spec.dimension); ++mask) {
        for (int i = 0; i < spec.dimension; ++i) y[static_cast<std::size_t>(i)] = (mask >> i & 1) ? -1 : 1;
        worst = std::max(worst, std::abs(spec.evaluate(y) - or_value(y)));
    }
    return worst;
}

}  // namespace

TEST_CASE("hamming ball enumerates exactly C(d,<=k) points") {
    HammingBall ball{7, 3};
    std::uint64_t seen = 0;
    ball.for_each([&](std::span<const std::int8_t> y) {
        ++seen;
        int negs = 0;
        for (auto v : y) negs += v < 0;
        REQUIRE(negs <= 3);
    });
    CHECK(seen == ball.count());
    CHECK(ball.count() == 1 + 7 + 21 + 35);
}

TEST_CASE("restricted approximation accuracy on H_{24,3}") {
    const double gamma = 1.0 / 400.0;

    ApproxSpec cheb = build_restricted_approx(24, 3, 6, gamma, AmplifierKind::chebyshev);
    BallReport cheb_report = verify_on_ball(cheb, 3);
    CHECK(cheb_report.points == 2325);
    CHECK(cheb_report.max_error <= gamma);

    ApproxSpec interp = build_restricted_approx(24, 3, 6, gamma, AmplifierKind::interpolation);
    BallReport interp_report = verify_on_ball(interp, 3);
    CHECK(interp_report.max_error <= 1e-9);

    // All-FALSE input is exact because q(0) = 0.
    std::vector<std::int8_t> ones(24, 1);
    CHECK(cheb.evaluate(ones) == Catch::Approx(1.0).margin(1e-12));
    CHECK(interp.evaluate(ones) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("threaded ball verification agrees with the serial scan") {
    ApproxSpec spec = build_restricted_approx(20, 3, 5, 1.0 / 100.0, AmplifierKind::chebyshev);
    BallReport serial = verify_on_ball(spec, 3, std::uint64_t{1} << 26, 1);
    BallReport parallel = verify_on_ball(spec, 3, std::uint64_t{1} << 26, 4);
    CHECK(parallel.max_error == Catch::Approx(serial.max_error).margin(1e-15));
    CHECK_THROWS_AS(verify_on_ball(spec, 3, 10), budget_exceeded);
}

TEST_CASE("restricted approximation accuracy at d=30") {
    ApproxSpec spec = build_restricted_approx(30, 3, 6, 1.0 / 100.0, AmplifierKind::chebyshev);
    BallReport report = verify_on_ball(spec, 3);
    CHECK(report.points == binomial_sum(30, 3));
    CHECK(report.max_error <= 1.0 / 100.0);
}

TEST_CASE("global approximation accuracy on the full cube") {
    ApproxSpec spec = build_global_approx(12, 4, 1.0 / 100.0);
    CHECK(exhaustive_cube_error(spec) <= 1.0 / 100.0);
    std::vector<std::int8_t> ones(12, 1);
    CHECK(spec.evaluate(ones) == Catch::Approx(1.0).margin(1e-12));

    ApproxSpec wide = build_global_approx(14, 5, 1.0 / 50.0);
    CHECK(exhaustive_cube_error(wide) <= 1.0 / 50.0);
}

TEST_CASE("expansion matches unexpanded evaluation everywhere") {
    for (AmplifierKind kind : {AmplifierKind::interpolation, AmplifierKind::chebyshev}) {
        ApproxSpec spec = build_restricted_approx(12, 3, 4, 1.0 / 400.0, kind);
        SparsePoly expanded = expand(spec);
        std::vector<std::int8_t> y(12);
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << 12); ++mask) {
            for (int i = 0; i < 12; ++i) y[static_cast<std::size_t>(i)] = (mask >> i & 1) ? -1 : 1;
            REQUIRE(expanded.evaluate(y) == Catch::Approx(spec.evaluate(y)).margin(1e-9));
        }
    }
}

TEST_CASE("realized expansion weight for d=12, m=4, k=2, interpolation") {
    ApproxSpec spec = build_restricted_approx(12, 2, 4, 1.0 / 400.0, AmplifierKind::interpolation);
    SparsePoly expanded = expand(spec);

    // Independent oracle: recover the coefficients from function values
    // by the Walsh transform and sum their magnitudes.
    auto coeffs = walsh_coefficients(cube_values(expanded), 12);
    double oracle_weight = 0.0;
    for (double c : coeffs) oracle_weight += std::abs(c);

    CHECK(expanded.weight() == Catch::Approx(oracle_weight).margin(1e-9));
    CHECK(expanded.weight() == Catch::Approx(23.75).margin(1e-9));  // recorded golden value
    CHECK(expanded.degree() == 6);
    CHECK(expanded.weight() <= spec.weight_bound);
    CHECK(expanded.degree() <= spec.degree_bound);
}

TEST_CASE("choose_block_count scan") {
    // Recorded golden choice for d=24, k=3, gamma=1/400 under cap 1000.
    CHECK(choose_block_count(24, 3, 1.0 / 400.0, ApproxMode::restricted, 1000.0) == 6);

    // k = d degenerates to the exact interpolation regime with m = d.
    CHECK(choose_block_count(8, 8, 0.1, ApproxMode::restricted, 1e12) == 8);

    // Never below k in restricted mode.
    for (int k = 1; k <= 4; ++k)
        CHECK(choose_block_count(12, k, 0.05, ApproxMode::restricted, 1e12) >= k);

    CHECK_THROWS_AS(choose_block_count(24, 3, 1.0 / 400.0, ApproxMode::restricted, 1.0),
                    weight_cap_exceeded);
}

TEST_CASE("bound monotonicity over the scan grid") {
    int prev_t = std::numeric_limits<int>::max();
    double prev_w = 0.0;
    for (int m = 3; m <= 24; ++m) {
        ApproxSpec spec = build_restricted_approx(24, 3, m, 1.0 / 400.0);
        CHECK(spec.degree_bound <= prev_t);
        CHECK(spec.weight_bound >= prev_w - 1e-9);
        prev_t = spec.degree_bound;
        prev_w = spec.weight_bound;
    }
}

TEST_CASE("padding soundness") {
    // d = 10 split into m = 4 blocks (sizes 3,3,2,2) versus the same
    // construction on d = 12 with the two phantom variables held FALSE.
    ApproxSpec ragged = build_restricted_approx(10, 2, 4, 0.01, AmplifierKind::interpolation);
    ApproxSpec padded = build_restricted_approx(12, 2, 4, 0.01, AmplifierKind::interpolation);
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        auto y10 = polydp::testing::random_point(rng, 10);
        std::vector<std::int8_t> y12(12, 1);
        // Ragged blocks: {0,1,2},{3,4,5},{6,7},{8,9}; padded blocks place
        // the phantoms at the tail of the short blocks.
        const int map[10] = {0, 1, 2, 3, 4, 5, 6, 7, 9, 10};
        for (int i = 0; i < 10; ++i) y12[static_cast<std::size_t>(map[i])] = y10[static_cast<std::size_t>(i)];
        REQUIRE(padded.evaluate(y12) == Catch::Approx(ragged.evaluate(y10)).margin(1e-12));
    }
}

TEST_CASE("restrict_to_record substitution on polynomials") {
    ApproxSpec spec = build_restricted_approx(6, 2, 3, 0.01, AmplifierKind::interpolation);
    SparsePoly g = expand(spec);

    std::vector<std::uint8_t> ones(6, 1);
    SparsePoly unchanged = restrict_to_record(g, ones);
    for (const auto& [mono, c] : g.terms()) REQUIRE(unchanged.coefficient(mono) == Catch::Approx(c));

    std::vector<std::uint8_t> zeros(6, 0);
    SparsePoly collapsed = restrict_to_record(g, zeros);
    CHECK(collapsed.degree() == 0);
    // OR over the empty attribute set is FALSE, so f_x == 0 under the
    // (1 - G)/2 family map.
    CHECK((1.0 - collapsed.coefficient({})) / 2.0 == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("restricted record approximates the per-record family function") {
    const double gamma = 0.01;
    ApproxSpec spec = build_restricted_approx(6, 2, 3, gamma, AmplifierKind::chebyshev);
    SparsePoly g = expand(spec);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::uint8_t> record(6);
        for (auto& b : record) b = rng() & 1;
        SparsePoly restricted_poly = restrict_to_record(g, record);
        ApproxSpec restricted_spec = restrict_to_record(spec, record);

        CHECK(restricted_poly.degree() <= g.degree());
        CHECK(restricted_poly.weight() <= g.weight() + 1e-9);
        CHECK(restricted_spec.degree_bound <= spec.degree_bound);
        CHECK(restricted_spec.weight_bound <= spec.weight_bound + 1e-9);

        HammingBall ball{6, 2};
        ball.for_each([&](std::span<const std::int8_t> y) {
            // f_x(y): does some selected attribute (x_i = 1) meet y_i = -1?
            double fx = 0.0;
            for (int i = 0; i < 6; ++i)
                if (record[static_cast<std::size_t>(i)] && y[static_cast<std::size_t>(i)] < 0) fx = 1.0;
            const double approx_fx = (1.0 - restricted_poly.evaluate(y)) / 2.0;
            REQUIRE(std::abs(approx_fx - fx) <= gamma / 2.0 + 1e-9);
            // Spec restriction evaluates G(y^x) identically.
            REQUIRE(restricted_spec.evaluate(y) == Catch::Approx(restricted_poly.evaluate(y)).margin(1e-9));
        });
    }
}

TEST_CASE("builder parameter validation") {
    CHECK_THROWS_AS(build_restricted_approx(8, 4, 3, 0.1), std::invalid_argument);   // m < k
    CHECK_THROWS_AS(build_restricted_approx(8, 2, 9, 0.1), std::invalid_argument);   // m > d
    CHECK_THROWS_AS(build_restricted_approx(8, 2, 4, 0.0), std::invalid_argument);   // gamma
    CHECK_THROWS_AS(build_global_approx(8, 0, 0.1), std::invalid_argument);
}
