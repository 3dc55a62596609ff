#pragma once

#include "selfnorm/distributions.hpp"
#include "selfnorm/kernels.hpp"

#include <cstdint>

namespace selfnorm {

/// Per-variable truncated-moment functional, i.i.d. scaling xi = X/(sd sqrt(n)):
/// delta = E xi_x^2 1{|xi_x|>1} + E |xi_x|^3 1{|xi_x|<=1} with xi_x = x xi.
double delta_ix(const DistributionSpec& dist, int n, double x);

/// L_{n,x} = n * delta (i.i.d. inputs).
double L_nx(const DistributionSpec& dist, int n, double x);

/// The 1+x variant used by the absolute-error estimate: L at tilt level 1+x.
double L_n_1px(const DistributionSpec& dist, int n, double x);

/// Per-variable tilt normalizer E exp(x xi - x^2 xi^2 / 2).
double tilt_normalizer(const DistributionSpec& dist, int n, double x);

/// I_{n,x} = normalizer^n.
double I_nx(const DistributionSpec& dist, int n, double x);

/// Side condition max_i delta_{i,x} <= 1 (equality across i for i.i.d. data).
bool condition_c1(const DistributionSpec& dist, int n, double x);
/// Side condition L_{n,x} <= c1 x^2.
bool condition_rc(const DistributionSpec& dist, int n, double x, double c1);

/// Self-normalized-sum envelope: C (1+x)^3 E|X|^3 / (sd^3 sqrt(n)).
/// Throws infinite_moment when the third moment diverges.
double envelope_jsw(const DistributionSpec& dist, int n, double x, double C);
/// Stated x-range of the sum result: x <= (sum E X^2)^{1/2} / (sum E|X|^3)^{1/3}.
double jsw_x_max(const DistributionSpec& dist, int n);

struct UstatEnvelopeParams {
    double p = 3.0;
    double sigma_p_ratio = 1.0; // sigma_p / sigma
    double sigma_h_ratio = 1.0; // sigma_h / sigma
    double a_m = 4.0;           // max{c0 tau, c0 + m}
};
UstatEnvelopeParams ustat_envelope_params(const KernelSpec& k,
                                          const DistributionSpec& dist, double p);

/// C { (sigma_p/sigma)^p (1+x)^p / n^{p/2-1} + (sqrt(a_m) + sigma_h/sigma)(1+x)^3/sqrt(n) }.
double envelope_ustat(int n, double x, const UstatEnvelopeParams& params, double C);
/// x <= c1 min{ (sigma/sigma_p) n^{1/2-1/p}, (n/a_m)^{1/6} }.
bool ustat_x_in_range(int n, double x, const UstatEnvelopeParams& params, double c1);

struct EstimateSE {
    double value = 0.0;
    double se = 0.0;
};

struct RemainderOptions {
    uint64_t reps = 2000;
    double c4 = 1.0;     // D3 constant
    bool use_d3 = true;  // substitute D3n for D2n (valid by domination)
    uint64_t eval_budget = 400'000'000; // reps * n * C(n-1,m-1) cap
};

/// Monte Carlo estimate of R_{n,x}: the tilted-measure expectation of
/// x|D1| + x^2|D2| plus the per-variable leave-one-out coupling terms.
EstimateSE estimate_Rnx(const DistributionSpec& dist, const KernelSpec& k, int n,
                        double x, SeedStream stream, RemainderOptions opts = {});

/// Monte Carlo estimate of breve R_{n,x} = L_{n,1+x} + E|D1| + x E|D2| +
/// sum_i E[ |xi_i 1{|xi_i|<=1/(1+x)}| (|D1-D1^(i)| + x|D2-D2^(i)|) ],
/// all under the base measure.
EstimateSE estimate_breve_Rnx(const DistributionSpec& dist, const KernelSpec& k,
                              int n, double x, SeedStream stream,
                              RemainderOptions opts = {});

/// delta_1 of the scaled variable scale*X and the residual
/// |E e^{lambda Y - theta Y^2} - 1 - (lambda^2/2 - theta) E Y^2| for Y = scale*X.
double delta1_scaled(const DistributionSpec& dist, double scale);
double f1_residual(const DistributionSpec& dist, double scale, double lambda,
                   double theta);

} // namespace selfnorm
