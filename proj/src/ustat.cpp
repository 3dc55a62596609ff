#include "selfnorm/ustat.hpp"

#include "selfnorm/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace selfnorm {

uint64_t binom(uint64_t n, uint64_t m) {
    if (m > n)
        return 0;
    m = std::min(m, n - m);
    unsigned __int128 r = 1;
    for (uint64_t k = 1; k <= m; ++k) {
        r = r * (n - m + k) / k;
        if (r > static_cast<unsigned __int128>(UINT64_MAX))
            return UINT64_MAX;
    }
    return static_cast<uint64_t>(r);
}

namespace {

// Lexicographic combination at a given rank (combinatorial number system).
std::vector<int> unrank_combination(uint64_t rank, int n, int m) {
    std::vector<int> idx(static_cast<std::size_t>(m));
    int v = 0;
    for (int j = 0; j < m; ++j) {
        while (true) {
            uint64_t c = binom(static_cast<uint64_t>(n - 1 - v),
                               static_cast<uint64_t>(m - 1 - j));
            if (c > rank)
                break;
            rank -= c;
            ++v;
        }
        idx[static_cast<std::size_t>(j)] = v++;
    }
    return idx;
}

bool next_combination(std::vector<int>& c, int n) {
    int m = static_cast<int>(c.size());
    int i = m - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - m + i)
        --i;
    if (i < 0)
        return false;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < m; ++j)
        c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
    return true;
}

void check_size(std::size_t n, int m, const UStatOptions& opts) {
    if (static_cast<int>(n) < m)
        throw arity_mismatch("sample smaller than kernel degree");
    if (!opts.relax_size && static_cast<int>(n) <= 2 * m)
        throw arity_mismatch("n <= 2m violates the standing assumption 2 <= m < n/2");
}

struct BlockAcc {
    KahanSum u_raw;
    KahanSum r_sum;
    std::vector<double> q_raw_sum;
    std::vector<double> psi;
    std::vector<double> pair_r_sum;
};

} // namespace

SubsetStats subset_stats(std::span<const double> sample, const KernelSpec& k,
                         double theta, double sigma,
                         const std::vector<double>& h1_centered, bool want_pairs,
                         UStatOptions opts) {
    const int n = static_cast<int>(sample.size());
    const int m = k.degree();
    check_size(sample.size(), m, opts);
    const uint64_t total = binom(static_cast<uint64_t>(n), static_cast<uint64_t>(m));
    if (total > opts.eval_cap)
        throw too_large("subset enumeration of C(" + std::to_string(n) + "," +
                        std::to_string(m) + ") = " + std::to_string(total) +
                        " exceeds cap " + std::to_string(opts.eval_cap));

    const bool want_r = !h1_centered.empty();
    const uint64_t kBlock = 1u << 16;
    const uint64_t nblocks = (total + kBlock - 1) / kBlock;

    std::vector<BlockAcc> accs(nblocks);
    auto run_block = [&](uint64_t b) {
        BlockAcc& acc = accs[b];
        acc.q_raw_sum.assign(static_cast<std::size_t>(n), 0.0);
        if (want_r) {
            acc.psi.assign(static_cast<std::size_t>(n), 0.0);
            if (want_pairs)
                acc.pair_r_sum.assign(static_cast<std::size_t>(n) * n, 0.0);
        }
        uint64_t begin = b * kBlock;
        uint64_t count = std::min(kBlock, total - begin);
        std::vector<int> idx = unrank_combination(begin, n, m);
        std::vector<double> args(static_cast<std::size_t>(m));
        for (uint64_t c = 0; c < count; ++c) {
            for (int j = 0; j < m; ++j)
                args[static_cast<std::size_t>(j)] =
                    sample[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
            double hval = k.eval(args);
            acc.u_raw.add(hval);
            for (int j = 0; j < m; ++j)
                acc.q_raw_sum[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] +=
                    hval;
            if (want_r) {
                double proj = 0.0;
                for (int j = 0; j < m; ++j)
                    proj += h1_centered[static_cast<std::size_t>(
                        idx[static_cast<std::size_t>(j)])];
                double r = (hval - theta - proj) / sigma;
                acc.r_sum.add(r);
                for (int j = 0; j < m; ++j) {
                    int i = idx[static_cast<std::size_t>(j)];
                    acc.psi[static_cast<std::size_t>(i)] += r;
                    if (want_pairs) {
                        for (int l = j + 1; l < m; ++l) {
                            int i2 = idx[static_cast<std::size_t>(l)];
                            acc.pair_r_sum[static_cast<std::size_t>(i) * n + i2] += r;
                            acc.pair_r_sum[static_cast<std::size_t>(i2) * n + i] += r;
                        }
                    }
                }
            }
            if (c + 1 < count)
                next_combination(idx, n);
        }
    };

    int workers = std::max(1, opts.workers);
    if (workers == 1 || nblocks == 1) {
        for (uint64_t b = 0; b < nblocks; ++b)
            run_block(b);
    } else {
        std::atomic<uint64_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (uint64_t b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1))
                    run_block(b);
            });
        for (auto& t : pool)
            t.join();
    }

    // Merge in fixed block order so results match across worker counts.
    SubsetStats out;
    out.q_raw_sum.assign(static_cast<std::size_t>(n), 0.0);
    if (want_r) {
        out.psi.assign(static_cast<std::size_t>(n), 0.0);
        if (want_pairs)
            out.pair_r_sum.assign(static_cast<std::size_t>(n) * n, 0.0);
    }
    KahanSum u, r;
    for (uint64_t b = 0; b < nblocks; ++b) {
        const BlockAcc& acc = accs[b];
        u.add(acc.u_raw.value());
        r.add(acc.r_sum.value());
        for (int i = 0; i < n; ++i)
            out.q_raw_sum[static_cast<std::size_t>(i)] +=
                acc.q_raw_sum[static_cast<std::size_t>(i)];
        if (want_r) {
            for (int i = 0; i < n; ++i)
                out.psi[static_cast<std::size_t>(i)] += acc.psi[static_cast<std::size_t>(i)];
            if (want_pairs)
                for (std::size_t i = 0; i < out.pair_r_sum.size(); ++i)
                    out.pair_r_sum[i] += acc.pair_r_sum[i];
        }
    }
    out.u_raw = u.value() / static_cast<double>(total);
    out.r_sum = r.value();
    return out;
}

double u_statistic(std::span<const double> sample, const KernelSpec& k,
                   UStatOptions opts) {
    return subset_stats(sample, k, 0.0, 1.0, {}, false, opts).u_raw;
}

Jackknife jackknife(std::span<const double> sample, const KernelSpec& k,
                    UStatOptions opts) {
    const int n = static_cast<int>(sample.size());
    const int m = k.degree();
    auto stats = subset_stats(sample, k, 0.0, 1.0, {}, false, opts);

    Jackknife out;
    out.u_n = stats.u_raw;
    const double per_i = static_cast<double>(
        binom(static_cast<uint64_t>(n - 1), static_cast<uint64_t>(m - 1)));
    out.q.resize(static_cast<std::size_t>(n));
    KahanSum ss;
    for (int i = 0; i < n; ++i) {
        double qi = stats.q_raw_sum[static_cast<std::size_t>(i)] / per_i;
        out.q[static_cast<std::size_t>(i)] = qi;
        double d = qi - out.u_n;
        ss.add(d * d);
    }
    double nm = static_cast<double>(n - m);
    out.s1_2 = (n - 1) * ss.value() / (nm * nm);
    return out;
}

Studentized studentize(std::span<const double> sample, const KernelSpec& k,
                       double theta, UStatOptions opts) {
    const int n = static_cast<int>(sample.size());
    const int m = k.degree();
    auto jk = jackknife(sample, k, opts);
    double s1 = std::sqrt(jk.s1_2);
    if (s1 <= 1e-12)
        throw zero_variance("studentize: jackknife variance collapsed (s1 <= 1e-12)");

    KahanSum ss_theta;
    for (double qi : jk.q) {
        double d = qi - theta;
        ss_theta.add(d * d);
    }
    double nm = static_cast<double>(n - m);
    double s1_star = std::sqrt((n - 1) * ss_theta.value() / (nm * nm));

    Studentized out;
    double num = std::sqrt(static_cast<double>(n)) * (jk.u_n - theta) / m;
    out.t_n = num / s1;
    out.t_star = num / s1_star;
    return out;
}

double t_star_transform(double x, int n, int m) {
    double c = static_cast<double>(m) * m * (n - 1) /
               (static_cast<double>(n - m) * (n - m));
    return x / std::sqrt(1.0 + x * x * c);
}

double t_star_inverse(double y, int n, int m) {
    double c = static_cast<double>(m) * m * (n - 1) /
               (static_cast<double>(n - m) * (n - m));
    double d = 1.0 - y * y * c;
    if (d <= 0.0)
        throw out_of_range("t_star_inverse: y outside the transform range");
    return y / std::sqrt(d);
}

HoeffdingDecomp hoeffding_decompose(std::span<const double> sample,
                                    const KernelSpec& k, const DistributionSpec& dist,
                                    UStatOptions opts) {
    const int n = static_cast<int>(sample.size());
    const int m = k.degree();
    check_size(sample.size(), m, opts);

    HoeffdingDecomp d;
    d.n = n;
    d.m = m;
    d.theta = k.theta(dist);
    double s2 = k.sigma2(dist);
    if (!std::isfinite(s2))
        throw infinite_moment(k.name() + ": sigma^2 diverges under " + dist.name());
    if (s2 <= 1e-12)
        throw degenerate_kernel(k.name() + ": sigma^2 ~ 0 under " + dist.name());
    d.sigma = std::sqrt(s2);

    std::vector<double> h1c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        h1c[static_cast<std::size_t>(i)] =
            k.h1(dist, sample[static_cast<std::size_t>(i)]) - d.theta;

    auto stats = subset_stats(sample, k, d.theta, d.sigma, h1c, false, opts);
    const double root_n = std::sqrt(static_cast<double>(n));
    const double total = static_cast<double>(
        binom(static_cast<uint64_t>(n), static_cast<uint64_t>(m)));
    const double per_i = static_cast<double>(
        binom(static_cast<uint64_t>(n - 1), static_cast<uint64_t>(m - 1)));

    d.u_raw = stats.u_raw;
    d.u_n = (d.u_raw - d.theta) / d.sigma;
    d.xi.resize(static_cast<std::size_t>(n));
    KahanSum w, v2;
    for (int i = 0; i < n; ++i) {
        double xi = h1c[static_cast<std::size_t>(i)] / (d.sigma * root_n);
        d.xi[static_cast<std::size_t>(i)] = xi;
        w.add(xi);
        v2.add(xi * xi);
    }
    d.w_n = w.value();
    d.v_n2 = v2.value();

    d.q.resize(static_cast<std::size_t>(n));
    KahanSum ss_u, ss_0, xi_psi, l2;
    for (int i = 0; i < n; ++i) {
        double qi = (stats.q_raw_sum[static_cast<std::size_t>(i)] / per_i - d.theta) /
                    d.sigma;
        d.q[static_cast<std::size_t>(i)] = qi;
    }
    d.psi = stats.psi;
    for (int i = 0; i < n; ++i) {
        double dq = d.q[static_cast<std::size_t>(i)] - d.u_n;
        ss_u.add(dq * dq);
        ss_0.add(d.q[static_cast<std::size_t>(i)] * d.q[static_cast<std::size_t>(i)]);
        xi_psi.add(d.xi[static_cast<std::size_t>(i)] * d.psi[static_cast<std::size_t>(i)]);
        l2.add(d.psi[static_cast<std::size_t>(i)] * d.psi[static_cast<std::size_t>(i)]);
    }
    const double nm = static_cast<double>(n - m);
    d.s1_2 = (n - 1) * ss_u.value() / (nm * nm);
    d.s1_star2 = (n - 1) * ss_0.value() / (nm * nm);
    d.lambda2 = l2.value();
    d.d1n = root_n * stats.r_sum / (m * total);

    // Exact expansion of s1*^2 / V^2 - 1 grouped by Lambda^2, W^2, the
    // xi-psi cross term, and W D1 (whose coefficient carries the full
    // n(n-1) factor).
    const double c_psi = static_cast<double>(
        binom(static_cast<uint64_t>(n - 2), static_cast<uint64_t>(m - 1)));
    double a_term = d.lambda2 / (c_psi * c_psi);
    double b_term = static_cast<double>(n) * (m - 1) * ((m + 1.0) * n - 2.0 * m) /
                    (nm * nm) * d.w_n * d.w_n;
    double c_term = 2.0 * root_n / c_psi * xi_psi.value();
    double e_term = 2.0 * m * (m - 1.0) * n * (n - 1.0) / (nm * nm) * d.w_n * d.d1n;
    d.d2n = (1.0 + (a_term + b_term + c_term + e_term) / d.v_n2) / (n - 1.0);

    double s1 = std::sqrt(d.s1_2);
    if (s1 <= 1e-12)
        throw zero_variance("hoeffding_decompose: jackknife variance collapsed");
    d.t_n = root_n * d.u_n / (m * s1);
    d.t_star = root_n * d.u_n / (m * std::sqrt(d.s1_star2));

    double sh2 = k.sigma_h2(dist);
    d.sigma_h_std = std::isfinite(sh2) ? std::sqrt(sh2) / d.sigma : kInf;
    return d;
}

double HoeffdingDecomp::d3n(double x, double c4) const {
    if (!(x > 0.0))
        throw out_of_range("d3n: x must be > 0");
    double nn = static_cast<double>(n);
    return c4 * (sigma_h_std * x / std::sqrt(nn) +
                 lambda2 * std::pow(nn, 1.5 - 2.0 * m) / (sigma_h_std * x));
}

bool membership_G_nx(const HoeffdingDecomp& d, double x) {
    if (x < 0.0)
        throw out_of_range("membership_G_nx: x must be >= 0");
    double vn = std::sqrt(d.v_n2);
    return std::abs(d.w_n) <=
               std::sqrt(x) * std::pow(static_cast<double>(d.n), 0.25) * (4.0 + vn) &&
           d.v_n2 >= 0.5;
}

namespace {

// O(n)/O(n log n) jackknife summaries for the built-in kernels:
// fills u and sum of (q_i - u)^2.
bool fast_jackknife(std::span<const double> x, BuiltinKernel id, double& u,
                    double& ss) {
    const int n = static_cast<int>(x.size());
    const double nd = static_cast<double>(n);
    switch (id) {
    case BuiltinKernel::t: {
        KahanSum s;
        for (double v : x)
            s.add(v);
        double mean = s.value() / nd;
        KahanSum dev2;
        for (double v : x) {
            double d = v - mean;
            dev2.add(d * d);
        }
        u = mean;
        double c = (nd - 2.0) / (2.0 * (nd - 1.0));
        ss = c * c * dev2.value();
        return true;
    }
    case BuiltinKernel::variance: {
        KahanSum s, q2;
        for (double v : x) {
            s.add(v);
            q2.add(v * v);
        }
        double S = s.value(), Q = q2.value();
        u = (nd * Q - S * S) / (nd * (nd - 1.0));
        KahanSum dev2;
        for (double v : x) {
            double qi = (nd * v * v - 2.0 * v * S + Q) / (2.0 * (nd - 1.0));
            double d = qi - u;
            dev2.add(d * d);
        }
        ss = dev2.value();
        return true;
    }
    case BuiltinKernel::gini: {
        std::vector<double> v(x.begin(), x.end());
        std::sort(v.begin(), v.end());
        std::vector<double> prefix(v.size() + 1, 0.0);
        for (std::size_t i = 0; i < v.size(); ++i)
            prefix[i + 1] = prefix[i] + v[i];
        double total = prefix[v.size()];
        KahanSum rowsum;
        std::vector<double> q(v.size());
        for (int kk = 1; kk <= n; ++kk) {
            double vk = v[static_cast<std::size_t>(kk - 1)];
            double row = vk * (kk - 1) - prefix[static_cast<std::size_t>(kk - 1)] +
                         (total - prefix[static_cast<std::size_t>(kk)]) -
                         vk * (n - kk);
            q[static_cast<std::size_t>(kk - 1)] = row / (nd - 1.0);
            rowsum.add(row);
        }
        u = rowsum.value() / (nd * (nd - 1.0));
        KahanSum dev2;
        for (double qi : q) {
            double d = qi - u;
            dev2.add(d * d);
        }
        ss = dev2.value();
        return true;
    }
    case BuiltinKernel::wilcoxon: {
        std::vector<double> v(x.begin(), x.end());
        std::sort(v.begin(), v.end());
        KahanSum csum;
        std::vector<double> q(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double y = v[i];
            auto it = std::upper_bound(v.begin(), v.end(), -y);
            double c = static_cast<double>(it - v.begin());
            if (y <= -y)
                c -= 1.0; // drop the self-pair
            q[i] = c / (nd - 1.0);
            csum.add(c);
        }
        u = csum.value() / (nd * (nd - 1.0));
        KahanSum dev2;
        for (double qi : q) {
            double d = qi - u;
            dev2.add(d * d);
        }
        ss = dev2.value();
        return true;
    }
    case BuiltinKernel::none:
        return false;
    }
    return false;
}

} // namespace

double studentized_u_value(std::span<const double> sample, const KernelSpec& k,
                           double theta, UStatOptions opts) {
    const int n = static_cast<int>(sample.size());
    const int m = k.degree();
    check_size(sample.size(), m, opts);

    double u, ss;
    if (!fast_jackknife(sample, k.builtin_id(), u, ss)) {
        auto jk = jackknife(sample, k, opts);
        u = jk.u_n;
        KahanSum dev2;
        for (double qi : jk.q) {
            double d = qi - u;
            dev2.add(d * d);
        }
        ss = dev2.value();
    }
    double nm = static_cast<double>(n - m);
    double s1 = std::sqrt((n - 1) * ss / (nm * nm));
    if (s1 <= 1e-12) {
        if (u > theta)
            return kInf;
        if (u < theta)
            return -kInf;
        return 0.0;
    }
    return std::sqrt(static_cast<double>(n)) * (u - theta) / (m * s1);
}

} // namespace selfnorm
