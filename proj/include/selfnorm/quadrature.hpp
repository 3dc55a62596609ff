#pragma once

#include <functional>
#include <vector>

namespace selfnorm {

struct QuadOptions {
    double abs_tol = 1e-12;
    int max_depth = 52;
};

using Integrand = std::function<double(double)>;

/// Adaptive Simpson on [a, b].
double integrate(const Integrand& f, double a, double b, QuadOptions opts = {});

/// Adaptive Simpson with interior split points (kinks, truncation
/// boundaries). Splits outside (a, b) are ignored.
double integrate_split(const Integrand& f, double a, double b,
                       std::vector<double> splits, QuadOptions opts = {});

struct TailOptions {
    QuadOptions quad{};
    double rel_stop = 1e-13; // stop when a segment adds less than this fraction
    int max_segments = 90;
    double growth = 1.6;
};

/// Integral over [a, +inf) for integrands with eventually-decaying tails
/// (polynomial decay included): geometric segments until the contribution is
/// negligible. Returns +inf when segment contributions fail to decay
/// (divergent moment guard).
double integrate_tail(const Integrand& f, double a, TailOptions opts = {});

} // namespace selfnorm
