#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "selfnorm/bounds.hpp"
#include "selfnorm/common.hpp"
#include "selfnorm/normal.hpp"
#include "selfnorm/tilting.hpp"
#include "selfnorm/ustat.hpp"

#include <cmath>

using namespace selfnorm;

TEST_CASE("gaussian tail and Mills ratio") {
    CHECK(normal_tail(0.0) == 0.5);
    CHECK(normal_tail(1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-13));
    for (double x : {0.1, 1.0, 3.0, 8.0}) {
        double tail = normal_tail(x);
        CHECK(tail >= x / (1.0 + x * x) * normal_pdf(x) - 1e-15);
        CHECK(tail <= normal_pdf(x) / x + 1e-15);
        CHECK(mills_psi(x) == doctest::Approx(tail / normal_pdf(x)).epsilon(1e-12));
    }
    // continued-fraction regime joins smoothly
    CHECK(mills_psi(36.0) == doctest::Approx(mills_psi(35.999999)).epsilon(1e-9));
    CHECK(mills_psi(50.0) < 1.0 / 50.0);
    CHECK(mills_psi(50.0) > 50.0 / (1.0 + 2500.0));
}

TEST_CASE("delta closed forms for the two-point support") {
    auto rad = make_distribution(Family::rademacher);
    // |xi_x| <= 1 everywhere: delta = (x/sqrt n)^3
    CHECK(delta_ix(rad, 25, 2.0) == doctest::Approx(std::pow(0.4, 3)).epsilon(1e-14));
    // |xi_x| > 1 everywhere: delta = x^2/n
    CHECK(delta_ix(rad, 25, 6.0) == doctest::Approx(36.0 / 25.0).epsilon(1e-14));
    CHECK(delta_ix(rad, 25, 0.0) == 0.0);
    CHECK(L_nx(rad, 25, 2.0) == doctest::Approx(25.0 * std::pow(0.4, 3)));
    // 1 <= x <= sqrt(n): L = x^3 / sqrt(n)
    CHECK(L_nx(rad, 25, 3.0) == doctest::Approx(27.0 / 5.0).epsilon(1e-13));
    CHECK(L_n_1px(rad, 25, 2.0) == doctest::Approx(L_nx(rad, 25, 3.0)).epsilon(1e-14));
}

TEST_CASE("delta against a 1e7-draw Monte Carlo oracle (normal, n=100, x=2)") {
    auto d = make_distribution(Family::normal);
    const int n = 100;
    const double x = 2.0;
    double scale = std::sqrt(100.0);
    CounterRng rng({31415, 0});
    const uint64_t reps = 10'000'000;
    double sum = 0.0, sum2 = 0.0;
    for (uint64_t i = 0; i < reps; ++i) {
        double xi_x = x * d.draw(rng) / scale;
        double v = std::abs(xi_x) > 1.0 ? xi_x * xi_x : std::abs(xi_x * xi_x * xi_x);
        sum += v;
        sum2 += v * v;
    }
    double mean = sum / reps;
    double se = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(delta_ix(d, n, x) - mean) < 4.0 * se);
}

TEST_CASE("L is nonnegative and nondecreasing in x") {
    for (auto f : {Family::normal, Family::exponential_centered,
                   Family::pareto_centered}) {
        auto d = make_distribution(f);
        double prev = 0.0;
        for (double x = 0.0; x <= 6.0; x += 0.25) {
            double l = L_nx(d, 50, x);
            CHECK(l >= prev - 1e-12);
            prev = l;
        }
    }
}

TEST_CASE("L_{n,1+x} chain bound for 0 <= x <= 1") {
    auto d = make_distribution(Family::normal);
    const int n = 50;
    double scale = d.sd() * std::sqrt(50.0);
    for (double x : {0.0, 0.5, 1.0}) {
        double lhs = L_n_1px(d, n, x);
        double one_px = 1.0 + x;
        double beta2_half = n * d.second_moment_tail(scale / 2.0) / (scale * scale);
        double beta3 = n * d.abs_third_below(scale) / (scale * scale * scale);
        double rhs = one_px * one_px * beta2_half + one_px * one_px * one_px * beta3;
        CHECK(lhs <= rhs + 1e-12);
    }
}

TEST_CASE("tilt normalizer: trivial tilt and two-point closed form") {
    auto rad = make_distribution(Family::rademacher);
    CHECK(I_nx(rad, 25, 0.0) == 1.0);
    double closed = std::pow(std::exp(-4.0 / 50.0) * std::cosh(0.4), 25);
    CHECK(I_nx(rad, 25, 2.0) == doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("normalizer against a Monte Carlo oracle (exponential, n=64, x=1.5)") {
    auto d = make_distribution(Family::exponential_centered);
    const int n = 64;
    const double x = 1.5;
    double scale = std::sqrt(64.0);
    CounterRng rng({777, 0});
    const uint64_t reps = 2'000'000;
    double sum = 0.0, sum2 = 0.0;
    for (uint64_t i = 0; i < reps; ++i) {
        double xi = d.draw(rng) / scale;
        double v = std::exp(x * xi - 0.5 * x * x * xi * xi);
        sum += v;
        sum2 += v * v;
    }
    double mean = sum / reps;
    double se = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(tilt_normalizer(d, n, x) - mean) < 4.0 * se);
}

TEST_CASE("per-variable normalizer bracket (5.5 / 2.65 constants)") {
    for (auto f : {Family::normal, Family::exponential_centered, Family::rademacher,
                   Family::uniform_centered, Family::pareto_centered,
                   Family::two_point}) {
        auto d = make_distribution(f);
        for (int n : {25, 100, 400}) {
            for (double x : {1.0, 2.0, 3.0}) {
                double kappa = tilt_normalizer(d, n, x);
                double delta = delta_ix(d, n, x);
                CHECK(kappa >= std::exp(-5.5 * delta) - 1e-12);
                CHECK(kappa <= std::exp(2.65 * delta) + 1e-12);
            }
        }
    }
}

TEST_CASE("side conditions") {
    auto rad = make_distribution(Family::rademacher);
    CHECK(condition_c1(rad, 100, 2.0));
    CHECK_FALSE(condition_c1(rad, 100, 11.0)); // delta = x^2/n = 1.21 > 1
    auto d = make_distribution(Family::normal);
    CHECK(condition_rc(d, 100, 2.0, 1.0));
    // L(x)/x^2 -> forced failure with a microscopic c1
    CHECK_FALSE(condition_rc(d, 100, 1.0, 1e-9));
}

TEST_CASE("self-normalized-sum envelope") {
    auto d = make_distribution(Family::normal);
    // E|Z|^3 = 2 sqrt(2/pi); frozen from the scalar oracle.
    CHECK(envelope_jsw(d, 100, 0.0, 1.0) ==
          doctest::Approx(0.15957691216057308).epsilon(1e-12));
    CHECK(envelope_jsw(d, 200, 0.0, 1.0) ==
          doctest::Approx(envelope_jsw(d, 100, 0.0, 1.0) / std::sqrt(2.0))
              .epsilon(1e-12));
    double prev = 0.0;
    for (double x = 0.0; x <= 4.0; x += 0.5) {
        double e = envelope_jsw(d, 100, x, 1.0);
        CHECK(e > prev);
        prev = e;
    }
    auto pareto = make_distribution(Family::pareto_centered);
    CHECK_THROWS_AS(envelope_jsw(pareto, 100, 1.0, 1.0), infinite_moment);
    CHECK(jsw_x_max(d, 100) ==
          doctest::Approx(10.0 / std::cbrt(100.0 * 2.0 * std::sqrt(2.0 / kPi)))
              .epsilon(1e-12));
}

TEST_CASE("studentized-U envelope") {
    auto d = make_distribution(Family::normal);
    auto params = ustat_envelope_params(builtin_kernel("t"), d, 3.0);
    CHECK(params.a_m == doctest::Approx(4.0)); // c0 + m with tau = 0
    double e_abs3 = 2.0 * std::sqrt(2.0 / kPi);
    CHECK(std::pow(params.sigma_p_ratio, 3.0) ==
          doctest::Approx(e_abs3).epsilon(1e-9));
    CHECK(params.sigma_h_ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    // x = 0 substitution
    double want = (e_abs3 + 2.0 + std::sqrt(2.0)) / 10.0;
    CHECK(envelope_ustat(100, 0.0, params, 1.0) == doctest::Approx(want).epsilon(1e-9));
    // vanishes with n at fixed x (exactly n^{-1/2} when p = 3)
    CHECK(envelope_ustat(1'000'000, 1.0, params, 1.0) ==
          doctest::Approx(0.01 * envelope_ustat(100, 1.0, params, 1.0))
              .epsilon(1e-12));
    // range predicate boundary: min(bound1, bound2) at n=50 is (50/4)^{1/6}
    double b2 = std::pow(50.0 / 4.0, 1.0 / 6.0);
    CHECK(ustat_x_in_range(50, b2 - 1e-9, params, 1.0));
    CHECK_FALSE(ustat_x_in_range(50, b2 + 1e-9, params, 1.0));
}

TEST_CASE("R_{n,x} collapses to the D2-only term for the linear kernel") {
    auto d = make_distribution(Family::normal);
    auto t = builtin_kernel("t");
    RemainderOptions opts;
    opts.reps = 200;
    auto est = estimate_Rnx(d, t, 12, 1.5, {4, 4}, opts);
    // D1 = 0 and Lambda^2 = 0, so R = x^2 * D3 = x^2 * sigma_h_std * x / sqrt(n).
    double sigma_h_std = std::sqrt(0.5) / 0.5;
    double want = 1.5 * 1.5 * (sigma_h_std * 1.5 / std::sqrt(12.0));
    CHECK(est.value == doctest::Approx(want).epsilon(1e-9));
    CHECK(est.se < 1e-8); // constant integrand, variance is pure roundoff
}

TEST_CASE("R_{n,x} against a plain change-of-measure oracle (gini, n=12)") {
    auto d = make_distribution(Family::normal);
    auto gini = builtin_kernel("gini");
    const int n = 12;
    const double x = 1.5;
    RemainderOptions opts;
    opts.reps = 3000;
    auto est = estimate_Rnx(d, gini, n, x, {21, 0}, opts);

    // Oracle: untilted draws with explicit e^{sum Y} weights for both addends.
    double theta = gini.theta(d);
    double sigma = std::sqrt(gini.sigma2(d));
    double sigma_h_std = std::sqrt(gini.sigma_h2(d)) / sigma;
    double scale = d.sd() * std::sqrt(12.0);
    double i_nx = I_nx(d, n, x);
    CounterRng rng({99, 9});
    const int reps = 60'000;
    double s1 = 0.0, s1sq = 0.0, s2 = 0.0, s2sq = 0.0;
    std::vector<double> z(n);
    UStatOptions relax;
    relax.relax_size = true;
    for (int r = 0; r < reps; ++r) {
        double gsum = 0.0;
        for (auto& v : z) {
            v = d.draw(rng);
            double xi = x * v / scale;
            gsum += xi - 0.5 * xi * xi;
        }
        std::vector<double> h1c(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            h1c[i] = gini.h1(d, z[i]) - theta;
        auto stats = subset_stats(z, gini, theta, sigma, h1c, true, relax);
        double d1 = std::sqrt(12.0) * stats.r_sum / (2.0 * 66.0);
        double lambda2 = 0.0;
        for (double p : stats.psi)
            lambda2 += p * p;
        double d3 = sigma_h_std * x / std::sqrt(12.0) +
                    lambda2 * std::pow(12.0, 1.5 - 4.0) / (sigma_h_std * x);
        double w = std::exp(gsum);
        double a = (x * std::abs(d1) + x * x * d3) * w / i_nx;
        s1 += a;
        s1sq += a * a;

        // second addend: per-i, weight excludes coordinate i
        double bsum = 0.0;
        for (int i = 0; i < n; ++i) {
            double xi_i = x * z[static_cast<std::size_t>(i)] / scale;
            double gi = xi_i - 0.5 * xi_i * xi_i;
            double d1diff = std::sqrt(12.0) *
                            std::abs(stats.psi[static_cast<std::size_t>(i)]) /
                            (2.0 * 66.0);
            double l2i = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                double pj = stats.psi[static_cast<std::size_t>(j)] -
                            stats.pair_r_sum[static_cast<std::size_t>(j) * n + i];
                l2i += pj * pj;
            }
            double d3diff = std::pow(12.0, 1.5 - 4.0) / (sigma_h_std * x) *
                            std::abs(lambda2 - l2i);
            bsum += std::min(std::abs(xi_i), 1.0) * (d1diff + x * d3diff) *
                    std::exp(gsum - gi) / i_nx;
        }
        s2 += bsum;
        s2sq += bsum * bsum;
    }
    double m1 = s1 / reps, m2 = s2 / reps;
    double v1 = (s1sq / reps - m1 * m1) / reps;
    double v2 = (s2sq / reps - m2 * m2) / reps;
    double oracle_val = m1 + m2;
    double oracle_se = std::sqrt(v1 + v2);
    double comb = std::sqrt(oracle_se * oracle_se + est.se * est.se);
    CHECK(std::abs(est.value - oracle_val) < 3.0 * comb);
}

TEST_CASE("breve R reduces to L plus the D2 term for the linear kernel") {
    auto d = make_distribution(Family::normal);
    auto t = builtin_kernel("t");
    RemainderOptions opts;
    opts.reps = 200;
    double x = 1.0;
    auto est = estimate_breve_Rnx(d, t, 12, x, {6, 1}, opts);
    double sigma_h_std = std::sqrt(2.0);
    double want = L_n_1px(d, 12, x) + x * (sigma_h_std * x / std::sqrt(12.0));
    CHECK(est.value == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("breve R at x=0 keeps only the D1 couplings") {
    auto d = make_distribution(Family::normal);
    auto gini = builtin_kernel("gini");
    RemainderOptions opts;
    opts.reps = 4000;
    auto est = estimate_breve_Rnx(d, gini, 12, 0.0, {6, 2}, opts);

    // direct-definition oracle: L_{n,1} + E|D1| + sum_i E|xi_i (D1 - D1^(i))|
    double theta = gini.theta(d);
    double sigma = std::sqrt(gini.sigma2(d));
    double scale = d.sd() * std::sqrt(12.0);
    CounterRng rng({61, 0});
    UStatOptions relax;
    relax.relax_size = true;
    const int reps = 20'000;
    double s = 0.0, ssq = 0.0;
    std::vector<double> z(12);
    for (int r = 0; r < reps; ++r) {
        for (auto& v : z)
            v = d.draw(rng);
        std::vector<double> h1c(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            h1c[i] = gini.h1(d, z[i]) - theta;
        auto stats = subset_stats(z, gini, theta, sigma, h1c, false, relax);
        double d1 = std::sqrt(12.0) * stats.r_sum / (2.0 * 66.0);
        double acc = std::abs(d1);
        for (int i = 0; i < 12; ++i) {
            double xi = z[static_cast<std::size_t>(i)] / scale;
            if (std::abs(xi) <= 1.0)
                acc += std::abs(xi) * std::sqrt(12.0) *
                       std::abs(stats.psi[static_cast<std::size_t>(i)]) / (2.0 * 66.0);
        }
        s += acc;
        ssq += acc * acc;
    }
    double mean = s / reps;
    double se = std::sqrt((ssq / reps - mean * mean) / reps);
    double want = L_nx(d, 12, 1.0) + mean;
    CHECK(std::abs(est.value - want) < 3.0 * std::sqrt(se * se + est.se * est.se));
}

TEST_CASE("budget guard") {
    auto d = make_distribution(Family::normal);
    auto gini = builtin_kernel("gini");
    RemainderOptions opts;
    opts.reps = 1000;
    opts.eval_budget = 10;
    CHECK_THROWS_AS(estimate_Rnx(d, gini, 12, 1.5, {1, 1}, opts), too_large);
}

TEST_CASE("exponential-moment residual scales with delta_1") {
    // Skewed bounded law so the cubic term drives the residual.
    auto d = make_distribution(Family::two_point, {{"p", 0.8}});
    double grid_max = 0.0;
    for (double lambda : {0.0, 1.0, 2.0, 4.0})
        for (double theta : {0.25, 1.0, 4.0}) {
            double r = f1_residual(d, 0.2, lambda, theta);
            double ratio = r / delta1_scaled(d, 0.2);
            grid_max = std::max(grid_max, ratio);
        }
    CHECK(std::isfinite(grid_max));
    CHECK(grid_max < 50.0); // finite fitted constant, reported not asserted tight
    double r1 = f1_residual(d, 0.2, 1.0, 0.5);
    double r2 = f1_residual(d, 0.1, 1.0, 0.5);
    double want = delta1_scaled(d, 0.1) / delta1_scaled(d, 0.2); // = 1/8
    CHECK(r2 / r1 == doctest::Approx(want).epsilon(0.5));
}

TEST_CASE("tilted cross-moment inequalities (numeric spot checks)") {
    // With X = s V, Y = X - X^2/2, Z = X^2 - E X^2, and the truncation split
    // d11 = E X^2 1{|X|>1}, d12 = E|X|^3 1{|X|<=1}:
    //   |E Z e^Y|      <= 4.2 d11 + 1.5 d12
    //   E Z^2 e^Y      <= 4 d11 + 2 d12 + 2 d11^2
    //   E |Y Z| e^Y    <= 2 d11 + d12
    //   E |Y| Z^2 e^Y  <= 3.1 d11 + d12 + d11^2
    for (auto f : {Family::normal, Family::two_point, Family::exponential_centered}) {
        auto d = make_distribution(f);
        for (double s : {0.3, 0.8, 1.6}) {
            double ex2 = s * s * d.variance();
            auto y_of = [s](double v) {
                double x = s * v;
                return x - 0.5 * x * x;
            };
            auto z_of = [s, ex2](double v) {
                double x = s * v;
                return x * x - ex2;
            };
            double d11 = s * s * d.second_moment_tail(1.0 / s);
            double d12 = s * s * s * d.abs_third_below(1.0 / s);
            double m_z = d.expect(
                [&](double v) { return z_of(v) * std::exp(y_of(v)); }, {}, 2.0);
            double m_z2 = d.expect(
                [&](double v) {
                    double z = z_of(v);
                    return z * z * std::exp(y_of(v));
                },
                {}, 4.0);
            double m_yz = d.expect(
                [&](double v) {
                    return std::abs(y_of(v) * z_of(v)) * std::exp(y_of(v));
                },
                {}, 4.0);
            double m_yz2 = d.expect(
                [&](double v) {
                    double z = z_of(v);
                    return std::abs(y_of(v)) * z * z * std::exp(y_of(v));
                },
                {}, 6.0);
            CHECK(std::abs(m_z) <= 4.2 * d11 + 1.5 * d12 + 1e-12);
            CHECK(m_z2 <= 4.0 * d11 + 2.0 * d12 + 2.0 * d11 * d11 + 1e-12);
            CHECK(m_yz <= 2.0 * d11 + d12 + 1e-12);
            CHECK(m_yz2 <= 3.1 * d11 + d12 + d11 * d11 + 1e-12);
        }
    }
}

TEST_CASE("delta against Monte Carlo for the heavier continuous laws") {
    for (auto f : {Family::exponential_centered, Family::pareto_centered}) {
        auto d = make_distribution(f);
        const int n = 64;
        const double x = 1.5;
        double scale = d.sd() * 8.0;
        CounterRng rng({2718, 1});
        const uint64_t reps = 2'000'000;
        double sum = 0.0, sum2 = 0.0;
        for (uint64_t i = 0; i < reps; ++i) {
            double xi_x = x * d.draw(rng) / scale;
            double v =
                std::abs(xi_x) > 1.0 ? xi_x * xi_x : std::abs(xi_x * xi_x * xi_x);
            sum += v;
            sum2 += v * v;
        }
        double mean = sum / reps;
        double se = std::sqrt((sum2 / reps - mean * mean) / reps);
        CHECK(std::abs(delta_ix(d, n, x) - mean) < 4.0 * se);
    }
}

TEST_CASE("remainder estimators in exact-D2 mode") {
    auto d = make_distribution(Family::normal);
    auto gini = builtin_kernel("gini");
    RemainderOptions opts;
    opts.reps = 150;
    opts.use_d3 = false;
    auto r = estimate_Rnx(d, gini, 10, 1.5, {13, 0}, opts);
    CHECK(std::isfinite(r.value));
    CHECK(r.value > 0.0);
    auto b = estimate_breve_Rnx(d, gini, 10, 0.5, {13, 1}, opts);
    CHECK(std::isfinite(b.value));
    CHECK(b.value > L_n_1px(d, 10, 0.5)); // base term plus nonnegative couplings
}

TEST_CASE("R_{n,x} vanishes as the threshold shrinks") {
    auto d = make_distribution(Family::normal);
    auto gini = builtin_kernel("gini");
    RemainderOptions opts;
    opts.reps = 150;
    auto small = estimate_Rnx(d, gini, 10, 0.01, {15, 0}, opts);
    auto large = estimate_Rnx(d, gini, 10, 1.5, {15, 1}, opts);
    CHECK(small.value < 0.1 * large.value);
    CHECK(small.value >= 0.0);
}
