#pragma once

#include "selfnorm/distributions.hpp"
#include "selfnorm/kernels.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace selfnorm {

struct TiltedMoments {
    double m_n;      // sum of E Y^_i
    double sigma_n2; // sum of Var Y^_i
    double v_n;      // sum of E |Y^_i|^3
};

/// Conjugated (exponentially tilted) per-variable law: dV ~ e^{g(y)} dF with
/// g(y) = x xi - x^2 xi^2 / 2 at xi = y/(sd sqrt(n)). Stored in X-space.
/// Immutable after build; sampling goes through inverse-CDF on a monotone
/// cubic interpolant of a mass-adaptive grid.
class TiltedDistribution {
public:
    const DistributionSpec& base() const { return base_; }
    int n() const { return n_; }
    double x() const { return x_; }

    double g(double y) const {
        double xi = y / scale_;
        double u = x_ * xi;
        return u - 0.5 * u * u;
    }
    double normalizer() const { return normalizer_; } // per-variable E e^Y
    double log_normalizer() const { return log_normalizer_; }

    double cdf(double y) const;
    double quantile(double u) const;
    double draw(CounterRng& rng) const { return quantile(rng.next_unit()); }

    /// Exact tilted moments by quadrature / summation (not sample-based).
    TiltedMoments moments() const { return moments_; }

    /// Grid nodes (y_k, V(y_k)); continuous laws only.
    const std::vector<double>& grid_y() const { return ys_; }
    const std::vector<double>& grid_v() const { return vs_; }
    bool is_discrete() const { return base_.is_discrete(); }
    const std::vector<Atom>& tilted_atoms() const { return atoms_; }

    friend TiltedDistribution build_tilted(const DistributionSpec& dist, int n,
                                           double x, int grid_size);

private:
    explicit TiltedDistribution(DistributionSpec base) : base_(std::move(base)) {}

    DistributionSpec base_;
    int n_ = 0;
    double x_ = 0.0;
    double scale_ = 1.0; // sd * sqrt(n)
    double normalizer_ = 1.0;
    double log_normalizer_ = 0.0;
    TiltedMoments moments_{};
    // continuous grid
    std::vector<double> ys_, vs_, slopes_inv_, slopes_fwd_;
    // discrete atoms (tilted masses)
    std::vector<Atom> atoms_;
    std::vector<double> atom_cum_;
};

TiltedDistribution build_tilted(const DistributionSpec& dist, int n, double x,
                                int grid_size = 4096);

std::vector<double> sample_tilted(const TiltedDistribution& tilted, std::size_t count,
                                  SeedStream stream);

struct TailEstimate {
    double estimate = 0.0;
    double se = 0.0;
    uint64_t reps = 0;
    std::string method;
    double ess = 0.0; // effective number of contributing draws
    // raw accumulators so block results pool exactly
    uint64_t hits = 0;     // plain
    double sum_v = 0.0;    // tilted: sum of w * indicator
    double sum_v2 = 0.0;   //         sum of (w * indicator)^2
    double sum_w = 0.0;    //         sum of weights
    double sum_w2 = 0.0;   //         sum of squared weights
};

using StatisticFn = std::function<double(std::span<const double>)>;
using EventFn = std::function<bool(std::span<const double>)>;

/// S_n / V_n of the raw sample.
StatisticFn self_normalized_statistic();
/// Studentized U-statistic with known theta (fast paths for built-ins).
StatisticFn make_studentized_u_statistic(KernelSpec kernel, double theta);
/// T = (W + D1)/(V sqrt(1 + D2)) on normalized xi = y/(sd sqrt(n)), with
/// D1 = c1 (V^2 - 1), D2 = c2 (V^2 - 1).
StatisticFn make_generic_statistic(const DistributionSpec& dist, int n, double c1,
                                   double c2);

/// Plain Monte Carlo of P(statistic >= x); binomial standard error.
TailEstimate estimate_tail_plain(const DistributionSpec& dist,
                                 const StatisticFn& statistic, int n, double x,
                                 uint64_t reps, SeedStream stream);

/// Change-of-measure estimator: P(event) = I_{n,x}^{tilt} E[e^{-sum g} 1_event]
/// under the tilted law. Unbiased for any measurable event of the sample.
/// Throws degenerate_weights when the effective sample size drops below
/// min_ess (block-pooling callers pass 0 and check after merging).
TailEstimate estimate_tail_tilted(const TiltedDistribution& tilted,
                                  const EventFn& event, uint64_t reps,
                                  SeedStream stream, double min_ess = 10.0);

} // namespace selfnorm
