#include "selfnorm/normal.hpp"

#include "selfnorm/common.hpp"

#include <cmath>

namespace selfnorm {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_tail(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

namespace {

// Laplace continued fraction for the Mills ratio, accurate for large x where
// tail/pdf would hit subnormals.
double mills_cf(double x) {
    double cf = 0.0;
    for (int k = 60; k >= 1; --k)
        cf = k / (x + cf);
    return 1.0 / (x + cf);
}

} // namespace

double mills_psi(double x) {
    if (x >= 36.0)
        return mills_cf(x);
    if (x <= -37.0)
        return kInf; // e^{x^2/2} overflow region; callers keep Psi on the tail side
    return normal_tail(x) / normal_pdf(x);
}

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw out_of_range("normal_quantile: u must lie in (0,1)");

    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double plow = 0.02425;
    double x;
    if (u < plow) {
        double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - plow) {
        double q = u - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley refinement against the erfc-based CDF.
    double e = normal_cdf(x) - u;
    double p = normal_pdf(x);
    if (p > 0.0) {
        double w = e / p;
        x -= w / (1.0 + 0.5 * x * w);
    }
    return x;
}

} // namespace selfnorm
