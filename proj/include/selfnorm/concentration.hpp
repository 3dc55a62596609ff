#pragma once

#include "selfnorm/distributions.hpp"

#include <functional>
#include <span>
#include <vector>

namespace selfnorm {

/// Solution of the Stein equation f' - w f = 1{w<=x} - Phi(x), evaluated
/// through Mills-ratio forms so e^{w^2/2} never appears alone.
double stein_f(double x, double w);
/// d/dx of stein_f.
double stein_f_dx(double x, double w);

struct SteinPropertyReport {
    double max_abs_f = 0.0;       // sup |f_x(w)|        (bounded by 1)
    double max_abs_wf = 0.0;      // sup |w f_x(w)|      (bounded by 1)
    double max_abs_dfdx = 0.0;    // sup |df/dx|         (bounded by 1)
    double max_p2_violation = 0.0; // excess over min{1, (|w|+sqrt(2pi)/4)|t|}
    double max_eqn_residual = 0.0; // Stein equation residual, central diff
};

/// Dense-grid certification of the solution properties over
/// x, w in [-lim, lim] with the given step; equation residual skips
/// |w - x| <= 0.01 (the solution's derivative jumps at w = x).
SteinPropertyReport stein_property_check(double lim = 6.0, double step = 0.05);

enum class DeltaChoice { constants, v_squared_band, custom };

struct ConcentrationConfig {
    explicit ConcentrationConfig(DistributionSpec d) : dist(std::move(d)) {}

    DistributionSpec dist;
    int n = 50;
    DeltaChoice choice = DeltaChoice::constants;
    double a = -1.0, b = 1.0; // constants case: Delta1 = a, Delta2 = b
    double c = 1.0;           // band case: Delta2 = -Delta1 = c (V^2 - 1)^2
    // custom case: user functions of xi (normalized) and their leave-one-out
    // versions; independence of xi_i from (Delta^(i), W - xi_i) is assumed,
    // not checkable.
    std::function<double(std::span<const double>)> d1, d2;
    std::function<double(std::span<const double>, int)> d1_loo, d2_loo;
    uint64_t reps = 100'000;
    SeedStream stream{};
};

struct ConcentrationReport {
    double lhs = 0.0, lhs_se = 0.0;
    double rhs = 0.0, rhs_se = 0.0;
    double margin = 0.0; // rhs - lhs
    bool verdict = false;
    double beta2 = 0.0, beta3 = 0.0;
    double band_term = 0.0, band_se = 0.0; // E|Delta2 - Delta1|
    double loo_term = 0.0, loo_se = 0.0;   // sum_i sum_j E|xi_i (Delta_j - Delta_j^(i))|
    bool independence_assumed = false;
};

/// Empirical check of P(Delta1 <= W <= Delta2) <= 17(beta2+beta3)
/// + 5 E|Delta2-Delta1| + 2 sum_i sum_j E|xi_i(Delta_j - Delta_j^(i))|.
/// Verdict allows 3 combined standard errors of slack.
ConcentrationReport concentration_check(const ConcentrationConfig& config);

struct SubgaussianPoint {
    double x = 0.0;
    double empirical = 0.0;
    double se = 0.0;
    double bound = 0.0;
    bool ok = false;
};

/// P(|S_n| >= x D_n) <= sqrt(2) e^{-x^2/8} with D_n^2 = V_n^2 + 5 B_n^2, on
/// normalized xi (B_n^2 = 1).
std::vector<SubgaussianPoint> subgaussian_lsw2(const DistributionSpec& dist, int n,
                                               std::span<const double> x_grid,
                                               uint64_t reps, SeedStream stream);

/// P(|W_n| >= t (4 + V_n)) <= 4 e^{-t^2/2}.
std::vector<SubgaussianPoint> subgaussian_wv(const DistributionSpec& dist, int n,
                                             std::span<const double> t_grid,
                                             uint64_t reps, SeedStream stream);

} // namespace selfnorm
