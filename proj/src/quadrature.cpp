#include "selfnorm/quadrature.hpp"

#include "selfnorm/common.hpp"

#include <algorithm>
#include <cmath>

namespace selfnorm {

namespace {

double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const Integrand& f, double a, double b, double fa, double fm, double fb,
             double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = simpson(fa, flm, fm, m - a);
    double right = simpson(fm, frm, fb, b - m);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double integrate(const Integrand& f, double a, double b, QuadOptions opts) {
    if (a == b)
        return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = simpson(fa, fm, fb, b - a);
    return sign * adapt(f, a, b, fa, fm, fb, whole, opts.abs_tol, opts.max_depth);
}

double integrate_split(const Integrand& f, double a, double b,
                       std::vector<double> splits, QuadOptions opts) {
    if (a == b)
        return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    splits.erase(std::remove_if(splits.begin(), splits.end(),
                                [&](double s) { return !(s > a && s < b); }),
                 splits.end());
    std::sort(splits.begin(), splits.end());
    splits.push_back(b);

    KahanSum total;
    double lo = a;
    QuadOptions piece = opts;
    piece.abs_tol = opts.abs_tol / static_cast<double>(splits.size());
    for (double hi : splits) {
        if (hi > lo)
            total.add(integrate(f, lo, hi, piece));
        lo = hi;
    }
    return sign * total.value();
}

double integrate_tail(const Integrand& f, double a, TailOptions opts) {
    double base = std::max(std::abs(a), 1.0);
    double lo = a;
    KahanSum total;
    double prev = kInf;
    int grew = 0;
    for (int k = 0; k < opts.max_segments; ++k) {
        double hi = lo + base;
        double seg = integrate(f, lo, hi, opts.quad);
        total.add(seg);
        double mag = std::abs(seg);
        if (mag <= opts.rel_stop * std::max(std::abs(total.value()), 1e-300))
            return total.value();
        if (mag > prev) {
            if (++grew >= 4)
                return kInf; // contributions growing: divergent
        } else {
            grew = 0;
        }
        prev = mag;
        lo = hi;
        base *= opts.growth;
    }
    return total.value();
}

} // namespace selfnorm
