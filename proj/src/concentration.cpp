#include "selfnorm/concentration.hpp"

#include "selfnorm/common.hpp"
#include "selfnorm/normal.hpp"

#include <cmath>

namespace selfnorm {

double stein_f(double x, double w) {
    double a = std::min(w, x);
    double b = std::max(w, x);
    if (a <= 0.0 && b >= 0.0)
        return normal_pdf(x) * mills_psi(-a) * mills_psi(b);
    if (a > 0.0) {
        if (w <= x) // both positive, w on the lower side
            return normal_cdf(w) * mills_psi(x) * std::exp(0.5 * (w * w - x * x));
        return normal_cdf(x) * mills_psi(w);
    }
    // both negative
    if (w <= x)
        return mills_psi(-w) * normal_tail(x);
    return mills_psi(-x) * normal_tail(w) * std::exp(0.5 * (w * w - x * x));
}

double stein_f_dx(double x, double w) {
    if (w <= x) {
        if (w <= 0.0)
            return -normal_pdf(x) * mills_psi(-w);
        return -normal_cdf(w) * std::exp(0.5 * (w * w - x * x));
    }
    if (w >= 0.0)
        return normal_pdf(x) * mills_psi(w);
    return normal_tail(w) * std::exp(0.5 * (w * w - x * x));
}

SteinPropertyReport stein_property_check(double lim, double step) {
    SteinPropertyReport rep;
    const double sqrt2pi_4 = kSqrt2Pi / 4.0;
    const std::vector<double> ts = {-2.0, -1.0, -0.5, -0.1, -0.01,
                                    0.0,  0.01, 0.1,  0.5,  1.0,  2.0};
    const double h = 1e-5;

    for (double x = -lim; x <= lim + 1e-12; x += step) {
        for (double w = -lim; w <= lim + 1e-12; w += step) {
            double f = stein_f(x, w);
            rep.max_abs_f = std::max(rep.max_abs_f, std::abs(f));
            rep.max_abs_wf = std::max(rep.max_abs_wf, std::abs(w * f));
            rep.max_abs_dfdx = std::max(rep.max_abs_dfdx, std::abs(stein_f_dx(x, w)));

            for (double t : ts) {
                double lhs = std::abs(w * f - (w + t) * stein_f(x, w + t));
                double bound = std::min(1.0, (std::abs(w) + sqrt2pi_4) * std::abs(t));
                rep.max_p2_violation = std::max(rep.max_p2_violation, lhs - bound);
            }

            if (std::abs(w - x) > 0.01) {
                double fprime = (stein_f(x, w + h) - stein_f(x, w - h)) / (2.0 * h);
                double target = (w <= x ? 1.0 : 0.0) - normal_cdf(x) + w * f;
                rep.max_eqn_residual =
                    std::max(rep.max_eqn_residual, std::abs(fprime - target));
            }
        }
    }
    return rep;
}

namespace {

struct MeanAcc {
    KahanSum s, s2;
    uint64_t count = 0;
    void add(double v) {
        s.add(v);
        s2.add(v * v);
        ++count;
    }
    double mean() const { return s.value() / static_cast<double>(count); }
    double se() const {
        double m = mean();
        double var = std::max(0.0, s2.value() / static_cast<double>(count) - m * m);
        return std::sqrt(var / static_cast<double>(count));
    }
};

} // namespace

ConcentrationReport concentration_check(const ConcentrationConfig& config) {
    const int n = config.n;
    if (n < 1 || config.reps < 1000)
        throw invalid_parameter("concentration_check: need n >= 1 and reps >= 1e3");
    const DistributionSpec& dist = config.dist;
    const double scale = dist.sd() * std::sqrt(static_cast<double>(n));

    ConcentrationReport rep;
    // beta2 + beta3 = L_{n,1}; both from the truncated-moment primitives.
    rep.beta2 = dist.second_moment_tail(scale) / dist.variance();
    rep.beta3 = static_cast<double>(n) * dist.abs_third_below(scale) /
                (scale * scale * scale);
    rep.independence_assumed = config.choice == DeltaChoice::custom;

    CounterRng rng(config.stream);
    std::vector<double> xi(static_cast<std::size_t>(n));
    uint64_t hits = 0;
    MeanAcc band, loo;

    for (uint64_t r = 0; r < config.reps; ++r) {
        double w = 0.0, v2 = 0.0;
        for (auto& v : xi) {
            v = dist.draw(rng) / scale;
            w += v;
            v2 += v * v;
        }

        double d1 = 0.0, d2 = 0.0;
        switch (config.choice) {
        case DeltaChoice::constants:
            d1 = config.a;
            d2 = config.b;
            band.add(std::abs(d2 - d1));
            loo.add(0.0);
            break;
        case DeltaChoice::v_squared_band: {
            double dev = v2 - 1.0;
            d2 = config.c * dev * dev;
            d1 = -d2;
            band.add(2.0 * d2);
            // Delta_j - Delta_j^(i) = +-c xi_i^2 (2(V^2-1) - xi_i^2)
            KahanSum term;
            for (double v : xi)
                term.add(std::abs(v) * v * v * std::abs(2.0 * dev - v * v));
            loo.add(2.0 * config.c * term.value());
            break;
        }
        case DeltaChoice::custom: {
            d1 = config.d1(xi);
            d2 = config.d2(xi);
            band.add(std::abs(d2 - d1));
            KahanSum term;
            for (int i = 0; i < n; ++i) {
                double diff1 = d1 - config.d1_loo(xi, i);
                double diff2 = d2 - config.d2_loo(xi, i);
                term.add(std::abs(xi[static_cast<std::size_t>(i)]) *
                         (std::abs(diff1) + std::abs(diff2)));
            }
            loo.add(term.value());
            break;
        }
        }
        if (d1 <= w && w <= d2)
            ++hits;
    }

    double reps = static_cast<double>(config.reps);
    rep.lhs = static_cast<double>(hits) / reps;
    rep.lhs_se = std::sqrt(rep.lhs * (1.0 - rep.lhs) / reps);
    rep.band_term = band.mean();
    rep.band_se = band.se();
    rep.loo_term = loo.mean();
    rep.loo_se = loo.se();
    rep.rhs = 17.0 * (rep.beta2 + rep.beta3) + 5.0 * rep.band_term + 2.0 * rep.loo_term;
    rep.rhs_se = std::sqrt(25.0 * rep.band_se * rep.band_se +
                           4.0 * rep.loo_se * rep.loo_se);
    rep.margin = rep.rhs - rep.lhs;
    double combined = std::sqrt(rep.lhs_se * rep.lhs_se + rep.rhs_se * rep.rhs_se);
    rep.verdict = rep.lhs <= rep.rhs + 3.0 * combined;
    return rep;
}

namespace {

std::vector<SubgaussianPoint> subgaussian_generic(
    const DistributionSpec& dist, int n, std::span<const double> grid, uint64_t reps,
    SeedStream stream, const std::function<double(double, double)>& threshold,
    const std::function<double(double)>& bound) {
    CounterRng rng(stream);
    std::vector<uint64_t> hits(grid.size(), 0);
    std::vector<double> xi(static_cast<std::size_t>(n));
    const double scale = dist.sd() * std::sqrt(static_cast<double>(n));
    for (uint64_t r = 0; r < reps; ++r) {
        double w = 0.0, v2 = 0.0;
        for (auto& v : xi) {
            v = dist.draw(rng) / scale;
            w += v;
            v2 += v * v;
        }
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (std::abs(w) >= threshold(grid[i], v2))
                ++hits[i];
    }
    std::vector<SubgaussianPoint> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto& p = out[i];
        p.x = grid[i];
        p.empirical = static_cast<double>(hits[i]) / static_cast<double>(reps);
        p.se = std::sqrt(p.empirical * (1.0 - p.empirical) / static_cast<double>(reps));
        p.bound = bound(grid[i]);
        p.ok = p.empirical <= p.bound + 3.0 * p.se;
    }
    return out;
}

} // namespace

std::vector<SubgaussianPoint> subgaussian_lsw2(const DistributionSpec& dist, int n,
                                               std::span<const double> x_grid,
                                               uint64_t reps, SeedStream stream) {
    return subgaussian_generic(
        dist, n, x_grid, reps, stream,
        [](double x, double v2) { return x * std::sqrt(v2 + 5.0); },
        [](double x) { return std::sqrt(2.0) * std::exp(-x * x / 8.0); });
}

std::vector<SubgaussianPoint> subgaussian_wv(const DistributionSpec& dist, int n,
                                             std::span<const double> t_grid,
                                             uint64_t reps, SeedStream stream) {
    return subgaussian_generic(
        dist, n, t_grid, reps, stream,
        [](double t, double v2) { return t * (4.0 + std::sqrt(v2)); },
        [](double t) { return 4.0 * std::exp(-t * t / 2.0); });
}

} // namespace selfnorm
