#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracle {

namespace {

double betacf(double a, double b, double x) {
    const int kMaxIt = 300;
    const double eps = 3e-16, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin)
        d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIt; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin)
            d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin)
            c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin)
            d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin)
            c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps)
            break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

} // namespace

double student_t_tail(double nu, double t) {
    double p = 0.5 * betai(nu / 2.0, 0.5, nu / (nu + t * t));
    return t >= 0.0 ? p : 1.0 - p;
}

double self_normalized_tail_normal(int n, double x) {
    if (!(x * x < n))
        throw std::invalid_argument("self_normalized_tail_normal: need x^2 < n");
    double nu = n - 1.0;
    double thr = x * std::sqrt(nu / (n - x * x));
    return student_t_tail(nu, thr);
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b,
                      int panels) {
    // 10-node Gauss-Legendre per panel.
    static const double xs[5] = {0.1488743389816312, 0.4333953941292472,
                                 0.6794095682990244, 0.8650633666889845,
                                 0.9739065285171717};
    static const double ws[5] = {0.2955242247147529, 0.2692667193099963,
                                 0.2190863625159820, 0.1494513491505806,
                                 0.0666713443086881};
    double total = 0.0;
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h;
        double mid = lo + 0.5 * h, half = 0.5 * h;
        double acc = 0.0;
        for (int i = 0; i < 5; ++i)
            acc += ws[i] * (f(mid + half * xs[i]) + f(mid - half * xs[i]));
        total += acc * half;
    }
    return total;
}

double brute_u(std::span<const double> sample,
               const std::function<double(std::span<const double>)>& h, int m) {
    const int n = static_cast<int>(sample.size());
    double sum = 0.0;
    long count = 0;
    std::vector<int> idx(static_cast<std::size_t>(m));
    std::vector<double> args(static_cast<std::size_t>(m));
    std::function<void(int, int)> rec = [&](int pos, int start) {
        if (pos == m) {
            for (int j = 0; j < m; ++j)
                args[static_cast<std::size_t>(j)] =
                    sample[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
            sum += h(args);
            ++count;
            return;
        }
        for (int v = start; v <= n - (m - pos); ++v) {
            idx[static_cast<std::size_t>(pos)] = v;
            rec(pos + 1, v + 1);
        }
    };
    rec(0, 0);
    return sum / static_cast<double>(count);
}

std::vector<double> brute_q(std::span<const double> sample,
                            const std::function<double(std::span<const double>)>& h,
                            int m) {
    const int n = static_cast<int>(sample.size());
    std::vector<double> q(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        long count = 0;
        std::vector<int> idx(static_cast<std::size_t>(m - 1));
        std::vector<double> args(static_cast<std::size_t>(m));
        args[0] = sample[static_cast<std::size_t>(i)];
        std::function<void(int, int)> rec = [&](int pos, int start) {
            if (pos == m - 1) {
                for (int j = 0; j < m - 1; ++j)
                    args[static_cast<std::size_t>(j + 1)] =
                        sample[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
                sum += h(args);
                ++count;
                return;
            }
            for (int v = start; v < n; ++v) {
                if (v == i)
                    continue;
                idx[static_cast<std::size_t>(pos)] = v;
                rec(pos + 1, v + 1);
            }
        };
        rec(0, 0);
        q[static_cast<std::size_t>(i)] = sum / static_cast<double>(count);
    }
    return q;
}

BruteDecomp brute_decomp_m2(std::span<const double> sample,
                            const selfnorm::KernelSpec& k,
                            const selfnorm::DistributionSpec& dist) {
    const int n = static_cast<int>(sample.size());
    const double nd = static_cast<double>(n);
    const double theta = k.theta(dist);
    const double sigma = std::sqrt(k.sigma2(dist));

    BruteDecomp out{};
    std::vector<double> h1(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        h1[static_cast<std::size_t>(i)] =
            (k.h1(dist, sample[static_cast<std::size_t>(i)]) - theta) / sigma;
        out.w += h1[static_cast<std::size_t>(i)] / std::sqrt(nd);
        out.v2 += h1[static_cast<std::size_t>(i)] * h1[static_cast<std::size_t>(i)] / nd;
    }

    auto hstd = [&](int i, int j) {
        double args[2] = {sample[static_cast<std::size_t>(i)],
                          sample[static_cast<std::size_t>(j)]};
        return (k.eval(std::span<const double>(args, 2)) - theta) / sigma;
    };
    double usum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            usum += hstd(i, j);
    out.u_std = usum / (nd * (nd - 1.0) / 2.0);
    out.d1 = std::sqrt(nd) * out.u_std / 2.0 - out.w; // Hoeffding split route

    std::vector<double> q(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (j != i)
                q[static_cast<std::size_t>(i)] += hstd(i, j);
        q[static_cast<std::size_t>(i)] /= nd - 1.0;
    }
    double ss_u = 0.0, ss_0 = 0.0;
    for (double qi : q) {
        ss_u += (qi - out.u_std) * (qi - out.u_std);
        ss_0 += qi * qi;
    }
    out.s1_2 = (nd - 1.0) * ss_u / ((nd - 2.0) * (nd - 2.0));
    out.s1_star2 = (nd - 1.0) * ss_0 / ((nd - 2.0) * (nd - 2.0));
    out.d2 = out.s1_star2 / out.v2 - 1.0; // definitional route

    for (int i = 0; i < n; ++i) {
        double psi = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i)
                psi += hstd(i, j) - h1[static_cast<std::size_t>(i)] -
                       h1[static_cast<std::size_t>(j)];
        out.lambda2 += psi * psi;
    }
    return out;
}

double rademacher_sv_tail(int n, double x) {
    long hits = 0;
    for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
        int pos = __builtin_popcountl(mask);
        double s = 2.0 * pos - n;
        if (s / std::sqrt(static_cast<double>(n)) >= x)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(1ul << n);
}

double rademacher_lsw2(int n, double x) {
    long hits = 0;
    for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
        int pos = __builtin_popcountl(mask);
        double w = (2.0 * pos - n) / std::sqrt(static_cast<double>(n));
        // V^2 = 1 exactly for normalized Rademacher, so D^2 = V^2 + 5 = 6.
        if (std::abs(w) >= x * std::sqrt(6.0))
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(1ul << n);
}

double rademacher_wv(int n, double t) {
    long hits = 0;
    for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
        int pos = __builtin_popcountl(mask);
        double w = (2.0 * pos - n) / std::sqrt(static_cast<double>(n));
        if (std::abs(w) >= t * 5.0) // V_n = 1: t (4 + V_n) = 5 t
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(1ul << n);
}

} // namespace oracle
