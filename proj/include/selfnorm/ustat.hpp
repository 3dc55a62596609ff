#pragma once

#include "selfnorm/kernels.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace selfnorm {

struct UStatOptions {
    uint64_t eval_cap = 10'000'000; // C(n,m) enumeration cap
    bool relax_size = false;        // waive the n > 2m standing assumption
    int workers = 1;                // block-parallel enumeration
};

/// C(n, m), saturating at UINT64_MAX.
uint64_t binom(uint64_t n, uint64_t m);

/// Exact U-statistic: average of h over all C(n,m) subsets.
double u_statistic(std::span<const double> sample, const KernelSpec& k,
                   UStatOptions opts = {});

struct Jackknife {
    double u_n = 0.0;
    std::vector<double> q; // q_i: leave-one-out averages containing i
    double s1_2 = 0.0;     // (n-1)/(n-m)^2 sum (q_i - U)^2
};
Jackknife jackknife(std::span<const double> sample, const KernelSpec& k,
                    UStatOptions opts = {});

struct Studentized {
    double t_n = 0.0;
    double t_star = 0.0;
};
/// T_n = sqrt(n)(U - theta)/(m s1); theta passed explicitly (known-theta
/// formulation). T* is the uncentered-jackknife companion; the two are linked
/// exactly by t_star_transform.
Studentized studentize(std::span<const double> sample, const KernelSpec& k,
                       double theta, UStatOptions opts = {});

/// x -> x / sqrt(1 + x^2 m^2 (n-1)/(n-m)^2); strictly increasing, maps T_n to
/// T_n*.
double t_star_transform(double x, int n, int m);
double t_star_inverse(double y, int n, int m);

/// Full decomposition of the Studentized U-statistic. The kernel is
/// standardized internally (h~ = (h - theta)/sigma with sigma^2 = Var h1), so
/// u_n, w_n, xi, q, s1 fields are in standardized units; u_raw/theta/sigma
/// carry the raw scale.
struct HoeffdingDecomp {
    int n = 0;
    int m = 0;
    double u_raw = 0.0;
    double theta = 0.0;
    double sigma = 0.0; // sqrt(Var h1)
    double u_n = 0.0;   // (u_raw - theta)/sigma
    double w_n = 0.0;
    double v_n2 = 0.0;
    std::vector<double> xi; // h1~(X_i)/sqrt(n)
    std::vector<double> q;  // standardized jackknife values
    double s1_2 = 0.0;      // centered jackknife variance
    double s1_star2 = 0.0;  // uncentered companion; equals v_n2 (1 + d2n)
    double d1n = 0.0;
    double d2n = 0.0;
    std::vector<double> psi; // psi_i = sum of r over (m-1)-subsets avoiding i
    double lambda2 = 0.0;    // sum psi_i^2
    double t_n = 0.0;
    double t_star = 0.0;
    double sigma_h_std = 0.0; // sigma_h / sigma

    /// D3n(x) = c4 [sigma_h_std x / sqrt(n) + lambda2 n^{3/2-2m} / (sigma_h_std x)].
    double d3n(double x, double c4 = 1.0) const;
};

HoeffdingDecomp hoeffding_decompose(std::span<const double> sample,
                                    const KernelSpec& k, const DistributionSpec& dist,
                                    UStatOptions opts = {});

/// G_{n,x} = { |W_n| <= sqrt(x) n^{1/4} (4 + V_n), V_n^2 >= 1/2 }.
bool membership_G_nx(const HoeffdingDecomp& d, double x);

/// Per-sample Studentized-U value with O(n log n) paths for the built-in
/// kernels (enumeration fallback otherwise). Returns +-inf when the jackknife
/// variance collapses, signed by U - theta.
double studentized_u_value(std::span<const double> sample, const KernelSpec& k,
                           double theta, UStatOptions opts = {});

// Per-subset enumeration shared with the remainder estimators. r(S) is the
// standardized kernel minus its projections, formed in raw scale first
// ((h - theta) - sum (h1_i - theta)) / sigma so linear kernels cancel
// bit-exactly. h1_centered holds h1(X_i) - theta; pass it empty to skip the
// r-based sums.
struct SubsetStats {
    double u_raw = 0.0;
    double r_sum = 0.0;             // sum over subsets of r(S)
    std::vector<double> q_raw_sum;  // per-i sum of raw h over subsets containing i
    std::vector<double> psi;        // per-i sum of r over subsets containing i
    std::vector<double> pair_r_sum; // n x n (row-major): sum of r over subsets containing {i,j}
};
SubsetStats subset_stats(std::span<const double> sample, const KernelSpec& k,
                         double theta, double sigma,
                         const std::vector<double>& h1_centered, bool want_pairs,
                         UStatOptions opts = {});

} // namespace selfnorm
