#pragma once

namespace selfnorm {

double normal_pdf(double x);
double normal_cdf(double x);

/// Upper tail 1 - Phi(x), relative accuracy ~1e-14 (complementary error
/// function route).
double normal_tail(double x);

/// Mills ratio Psi(x) = (1 - Phi(x)) / phi(x). The stable way to form
/// products e^{x^2/2} * (1 - Phi(x)); grows ~ sqrt(2*pi) e^{x^2/2} for
/// x -> -inf (overflows to +inf around x < -38).
double mills_psi(double x);

/// Inverse of normal_cdf on (0,1). Rational approximation polished with one
/// Halley step; full double accuracy on the open interval.
double normal_quantile(double u);

} // namespace selfnorm
