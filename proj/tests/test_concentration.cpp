#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "selfnorm/common.hpp"
#include "selfnorm/concentration.hpp"
#include "selfnorm/normal.hpp"

#include <cmath>

using namespace selfnorm;

TEST_CASE("Stein solution values") {
    CHECK(stein_f(0.0, 0.0) == doctest::Approx(kSqrt2Pi / 4.0).epsilon(1e-13));
    // w -> -inf decay: f_0(w) = Psi(-w) Phi_bar(0) ~ 1/(2|w|), so the exact
    // value at w = -10 is Psi(10)/2, and the decay continues monotonically.
    CHECK(stein_f(0.0, -10.0) ==
          doctest::Approx(mills_psi(10.0) * 0.5).epsilon(1e-12));
    CHECK(stein_f(0.0, -40.0) < stein_f(0.0, -10.0));
    CHECK(stein_f(0.0, -1e5) < 1e-4);
    // direct formula cross-check at a benign point
    double x = 1.0, w = 0.5;
    double direct = kSqrt2Pi * std::exp(0.5 * w * w) * normal_cdf(w) * normal_tail(x);
    CHECK(stein_f(x, w) == doctest::Approx(direct).epsilon(1e-13));
    // and on the other branch
    x = -0.5, w = 0.25;
    direct = kSqrt2Pi * std::exp(0.5 * w * w) * normal_cdf(x) * normal_tail(w);
    CHECK(stein_f(x, w) == doctest::Approx(direct).epsilon(1e-13));
    // stays finite and bounded far outside the naive-overflow range
    CHECK(std::isfinite(stein_f(0.0, 40.0)));
    CHECK(std::abs(stein_f(0.0, 40.0) * 40.0) <= 1.0 + 1e-9);
}

TEST_CASE("Stein solution properties on the dense grid") {
    auto rep = stein_property_check(6.0, 0.05);
    CHECK(rep.max_abs_f <= 1.0 + 1e-9);
    CHECK(rep.max_abs_wf <= 1.0 + 1e-9);
    CHECK(rep.max_abs_dfdx <= 1.0 + 1e-9);
    CHECK(rep.max_p2_violation <= 1e-9);
    CHECK(rep.max_eqn_residual < 1e-6);
}

TEST_CASE("property-2 spot value with slack") {
    double w = 2.0, t = 0.5, x = 1.0;
    double lhs = std::abs(w * stein_f(x, w) - (w + t) * stein_f(x, w + t));
    double bound = std::min(1.0, (std::abs(w) + kSqrt2Pi / 4.0) * std::abs(t));
    CHECK(lhs < bound);
}

TEST_CASE("derivative in x matches central differences") {
    for (double x : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
        for (double w : {-4.0, -1.0, 0.3, 2.5}) {
            double h = 1e-6;
            double num = (stein_f(x + h, w) - stein_f(x - h, w)) / (2.0 * h);
            CHECK(stein_f_dx(x, w) == doctest::Approx(num).epsilon(1e-5));
        }
    }
}

TEST_CASE("constants band: the leave-one-out term vanishes") {
    ConcentrationConfig cc{make_distribution(Family::normal)};
    cc.n = 30;
    cc.choice = DeltaChoice::constants;
    cc.a = -1.0;
    cc.b = 1.0;
    cc.reps = 20'000;
    cc.stream = {5, 0};
    auto rep = concentration_check(cc);
    CHECK(rep.loo_term == 0.0);
    CHECK(rep.band_term == doctest::Approx(2.0));
    CHECK(rep.rhs >= 10.0);
    CHECK(rep.lhs <= 1.0);
    CHECK(rep.verdict);
}

TEST_CASE("reversed constants: empty band, LHS = 0") {
    ConcentrationConfig cc{make_distribution(Family::normal)};
    cc.n = 30;
    cc.choice = DeltaChoice::constants;
    cc.a = 1.0;
    cc.b = -1.0;
    cc.reps = 20'000;
    cc.stream = {5, 1};
    auto rep = concentration_check(cc);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.verdict);
}

TEST_CASE("v-squared band verdict (normal, n=50)") {
    ConcentrationConfig cc{make_distribution(Family::normal)};
    cc.n = 50;
    cc.choice = DeltaChoice::v_squared_band;
    cc.c = 1.0;
    cc.reps = 100'000;
    cc.stream = {5, 2};
    auto rep = concentration_check(cc);
    CHECK(rep.verdict);
    CHECK(rep.margin > 0.0);
    CHECK(rep.beta2 >= 0.0);
    CHECK(rep.beta3 >= 0.0);
    CHECK_FALSE(rep.independence_assumed);
}

TEST_CASE("custom deltas replicate the v-squared band") {
    auto dist = make_distribution(Family::exponential_centered);
    const double c = 0.5;
    ConcentrationConfig band{dist};
    band.n = 25;
    band.choice = DeltaChoice::v_squared_band;
    band.c = c;
    band.reps = 40'000;
    band.stream = {5, 3};
    auto want = concentration_check(band);

    ConcentrationConfig custom{dist};
    custom.n = 25;
    custom.choice = DeltaChoice::custom;
    custom.reps = 40'000;
    custom.stream = {5, 3};
    auto dev = [](std::span<const double> xi) {
        double v2 = 0.0;
        for (double v : xi)
            v2 += v * v;
        return v2 - 1.0;
    };
    custom.d2 = [=](std::span<const double> xi) {
        double d = dev(xi);
        return c * d * d;
    };
    custom.d1 = [=](std::span<const double> xi) {
        double d = dev(xi);
        return -c * d * d;
    };
    custom.d2_loo = [=](std::span<const double> xi, int i) {
        double d = dev(xi) - xi[static_cast<std::size_t>(i)] * xi[static_cast<std::size_t>(i)];
        return c * d * d;
    };
    custom.d1_loo = [=](std::span<const double> xi, int i) {
        double d = dev(xi) - xi[static_cast<std::size_t>(i)] * xi[static_cast<std::size_t>(i)];
        return -c * d * d;
    };
    auto got = concentration_check(custom);
    CHECK(got.independence_assumed);
    CHECK(got.lhs == doctest::Approx(want.lhs).epsilon(1e-12));
    CHECK(got.band_term == doctest::Approx(want.band_term).epsilon(1e-10));
    CHECK(got.loo_term == doctest::Approx(want.loo_term).epsilon(1e-10));
}

TEST_CASE("sub-gaussian bound: trivial point and normal data") {
    auto d = make_distribution(Family::normal);
    std::vector<double> grid{0.0, 2.0};
    auto pts = subgaussian_lsw2(d, 100, grid, 20'000, {6, 0});
    CHECK(pts[0].bound == doctest::Approx(std::sqrt(2.0)));
    CHECK(pts[0].ok); // bound > 1 >= empirical
    CHECK(pts[1].bound == doctest::Approx(std::sqrt(2.0) * std::exp(-0.5)));
    CHECK(pts[1].ok);
    auto wv = subgaussian_wv(d, 100, grid, 20'000, {6, 1});
    CHECK(wv[1].bound == doctest::Approx(4.0 * std::exp(-2.0)));
    CHECK(wv[1].ok);
}

TEST_CASE("sub-gaussian bounds against exhaustive rademacher enumeration") {
    for (double x : {1.0, 2.0, 3.0}) {
        double p = oracle::rademacher_lsw2(10, x);
        CHECK(p <= std::sqrt(2.0) * std::exp(-x * x / 8.0));
        double q = oracle::rademacher_wv(10, x);
        CHECK(q <= 4.0 * std::exp(-x * x / 2.0));
    }
}

TEST_CASE("preconditions") {
    ConcentrationConfig cc{make_distribution(Family::normal)};
    cc.reps = 10;
    CHECK_THROWS_AS(concentration_check(cc), invalid_parameter);
}
