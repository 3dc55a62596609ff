#include "selfnorm/bounds.hpp"

#include "selfnorm/common.hpp"
#include "selfnorm/tilting.hpp"
#include "selfnorm/ustat.hpp"

#include <algorithm>
#include <cmath>

namespace selfnorm {

double delta_ix(const DistributionSpec& dist, int n, double x) {
    if (x < 0.0)
        throw out_of_range("delta_ix: x must be >= 0");
    if (x == 0.0)
        return 0.0;
    double scale = dist.sd() * std::sqrt(static_cast<double>(n));
    double t = scale / x; // |xi_x| = 1 boundary in X units
    double tail = (x * x) / (scale * scale) * dist.second_moment_tail(t);
    double body = std::pow(x / scale, 3.0) * dist.abs_third_below(t);
    return tail + body;
}

double L_nx(const DistributionSpec& dist, int n, double x) {
    return n * delta_ix(dist, n, x);
}

double L_n_1px(const DistributionSpec& dist, int n, double x) {
    return L_nx(dist, n, 1.0 + x);
}

double tilt_normalizer(const DistributionSpec& dist, int n, double x) {
    if (x < 0.0)
        throw out_of_range("tilt_normalizer: x must be >= 0");
    if (x == 0.0)
        return 1.0;
    double scale = dist.sd() * std::sqrt(static_cast<double>(n));
    auto g = [scale, x](double y) {
        double u = x * y / scale;
        return std::exp(u - 0.5 * u * u);
    };
    double t = scale / x;
    return dist.expect(g, {-t, t}, 0.0);
}

double I_nx(const DistributionSpec& dist, int n, double x) {
    return std::pow(tilt_normalizer(dist, n, x), static_cast<double>(n));
}

bool condition_c1(const DistributionSpec& dist, int n, double x) {
    return delta_ix(dist, n, x) <= 1.0;
}

bool condition_rc(const DistributionSpec& dist, int n, double x, double c1) {
    return L_nx(dist, n, x) <= c1 * x * x;
}

double envelope_jsw(const DistributionSpec& dist, int n, double x, double C) {
    double b3 = dist.abs_third_moment();
    if (!std::isfinite(b3))
        throw infinite_moment(dist.name() + ": E|X|^3 diverges");
    double sd3 = dist.sd() * dist.variance();
    double one_px = 1.0 + x;
    return C * one_px * one_px * one_px * b3 /
           (sd3 * std::sqrt(static_cast<double>(n)));
}

double jsw_x_max(const DistributionSpec& dist, int n) {
    double b3 = dist.abs_third_moment();
    if (!std::isfinite(b3))
        return 0.0;
    double nd = static_cast<double>(n);
    return std::sqrt(nd) * dist.sd() / std::cbrt(nd * b3);
}

UstatEnvelopeParams ustat_envelope_params(const KernelSpec& k,
                                          const DistributionSpec& dist, double p) {
    UstatEnvelopeParams out;
    out.p = p;
    double s2 = k.sigma2(dist);
    if (!std::isfinite(s2) || s2 <= 0.0)
        throw degenerate_kernel(k.name() + ": sigma^2 unusable under " + dist.name());
    double sigma = std::sqrt(s2);
    double sp = k.sigma_p(dist, p);
    out.sigma_p_ratio = std::isfinite(sp) ? sp / sigma : kInf;
    double sh2 = k.sigma_h2(dist);
    out.sigma_h_ratio = std::isfinite(sh2) ? std::sqrt(sh2) / sigma : kInf;
    auto kc = k.kc(dist);
    out.a_m = std::max(kc.c0 * kc.tau, kc.c0 + k.degree());
    return out;
}

double envelope_ustat(int n, double x, const UstatEnvelopeParams& params, double C) {
    double nd = static_cast<double>(n);
    double one_px = 1.0 + x;
    double first = std::pow(params.sigma_p_ratio, params.p) *
                   std::pow(one_px, params.p) / std::pow(nd, params.p / 2.0 - 1.0);
    double second = (std::sqrt(params.a_m) + params.sigma_h_ratio) * one_px * one_px *
                    one_px / std::sqrt(nd);
    return C * (first + second);
}

bool ustat_x_in_range(int n, double x, const UstatEnvelopeParams& params, double c1) {
    double nd = static_cast<double>(n);
    double bound1 = std::pow(nd, 0.5 - 1.0 / params.p) / params.sigma_p_ratio;
    double bound2 = std::pow(nd / params.a_m, 1.0 / 6.0);
    return x <= c1 * std::min(bound1, bound2);
}

namespace {

struct KernelContext {
    double theta;
    double sigma;
    double sigma_h_std;
    int m;
    uint64_t c_nm;   // C(n, m)
    uint64_t c_psi;  // C(n-2, m-1)
    double root_n;
    double scale;    // sd sqrt(n)
};

KernelContext resize_context(const KernelContext& base, const DistributionSpec& dist,
                             int n) {
    KernelContext ctx = base;
    ctx.c_nm = binom(static_cast<uint64_t>(n), static_cast<uint64_t>(ctx.m));
    ctx.c_psi = binom(static_cast<uint64_t>(n - 2), static_cast<uint64_t>(ctx.m - 1));
    ctx.root_n = std::sqrt(static_cast<double>(n));
    ctx.scale = dist.sd() * ctx.root_n;
    return ctx;
}

KernelContext make_context(const DistributionSpec& dist, const KernelSpec& k, int n) {
    KernelContext ctx;
    ctx.m = k.degree();
    ctx.theta = k.theta(dist);
    double s2 = k.sigma2(dist);
    if (!std::isfinite(s2) || s2 <= 1e-12)
        throw degenerate_kernel(k.name() + ": sigma^2 unusable under " + dist.name());
    ctx.sigma = std::sqrt(s2);
    double sh2 = k.sigma_h2(dist);
    if (!std::isfinite(sh2))
        throw infinite_moment(k.name() + ": sigma_h^2 diverges under " + dist.name());
    ctx.sigma_h_std = std::sqrt(sh2) / ctx.sigma;
    return resize_context(ctx, dist, n);
}

struct DecompBits {
    double d1 = 0.0;
    double d2_like = 0.0;            // |D2| or D3 depending on mode
    double d2_signed = 0.0;          // D2 with sign (== d2_like for D3 mode)
    std::vector<double> psi;         // per-i
    std::vector<double> loo_d2_diff; // per-i |D2 - D2^(i)| (or D3 version)
};

// One enumeration pass per vector: D1, D2 (or D3), psi, and the
// leave-one-out D2/D3 differences.
DecompBits decomp_bits(std::span<const double> z, const KernelSpec& k,
                       const DistributionSpec& dist, const KernelContext& ctx, int n,
                       double x, const RemainderOptions& opts, bool want_loo) {
    std::vector<double> h1c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        h1c[static_cast<std::size_t>(i)] =
            k.h1(dist, z[static_cast<std::size_t>(i)]) - ctx.theta;

    UStatOptions uopts;
    uopts.relax_size = true;
    auto stats = subset_stats(z, k, ctx.theta, ctx.sigma, h1c, want_loo, uopts);

    DecompBits out;
    out.psi = stats.psi;
    out.d1 = ctx.root_n * stats.r_sum / (ctx.m * static_cast<double>(ctx.c_nm));

    KahanSum l2;
    for (double p : stats.psi)
        l2.add(p * p);
    double lambda2 = l2.value();
    double nd = static_cast<double>(n);
    double d3_scale = opts.c4 * std::pow(nd, 1.5 - 2.0 * ctx.m) / (ctx.sigma_h_std * x);

    if (opts.use_d3) {
        out.d2_like = opts.c4 * ctx.sigma_h_std * x / ctx.root_n + d3_scale * lambda2;
        out.d2_signed = out.d2_like;
    } else {
        KahanSum w, v2, xipsi;
        for (int i = 0; i < n; ++i) {
            double xi = h1c[static_cast<std::size_t>(i)] / (ctx.sigma * ctx.root_n);
            w.add(xi);
            v2.add(xi * xi);
            xipsi.add(xi * stats.psi[static_cast<std::size_t>(i)]);
        }
        double cpsi = static_cast<double>(ctx.c_psi);
        double nm = static_cast<double>(n - ctx.m);
        double a = lambda2 / (cpsi * cpsi);
        double b = nd * (ctx.m - 1) * ((ctx.m + 1.0) * nd - 2.0 * ctx.m) / (nm * nm) *
                   w.value() * w.value();
        double c = 2.0 * ctx.root_n / cpsi * xipsi.value();
        double e = 2.0 * ctx.m * (ctx.m - 1.0) * nd * (nd - 1.0) / (nm * nm) *
                   w.value() * out.d1;
        out.d2_signed = (1.0 + (a + b + c + e) / v2.value()) / (nd - 1.0);
        out.d2_like = std::abs(out.d2_signed);
    }

    if (want_loo) {
        out.loo_d2_diff.assign(static_cast<std::size_t>(n), 0.0);
        if (opts.use_d3) {
            for (int i = 0; i < n; ++i) {
                KahanSum l2i;
                for (int j = 0; j < n; ++j) {
                    if (j == i)
                        continue;
                    double pj = stats.psi[static_cast<std::size_t>(j)] -
                                stats.pair_r_sum[static_cast<std::size_t>(j) * n + i];
                    l2i.add(pj * pj);
                }
                out.loo_d2_diff[static_cast<std::size_t>(i)] =
                    std::abs(d3_scale * (lambda2 - l2i.value()));
            }
        } else {
            // Exact D2 leave-one-out: recompute on the subsample without i.
            for (int i = 0; i < n; ++i) {
                std::vector<double> zi;
                zi.reserve(static_cast<std::size_t>(n - 1));
                for (int j = 0; j < n; ++j)
                    if (j != i)
                        zi.push_back(z[static_cast<std::size_t>(j)]);
                auto sub_bits = decomp_bits(zi, k, dist,
                                            resize_context(ctx, dist, n - 1), n - 1,
                                            x, opts, false);
                out.loo_d2_diff[static_cast<std::size_t>(i)] =
                    std::abs(out.d2_signed - sub_bits.d2_signed);
            }
        }
    }
    return out;
}

} // namespace

EstimateSE estimate_Rnx(const DistributionSpec& dist, const KernelSpec& k, int n,
                        double x, SeedStream stream, RemainderOptions opts) {
    if (!(x > 0.0))
        throw out_of_range("estimate_Rnx: x must be > 0");
    auto ctx = make_context(dist, k, n);
    uint64_t per_rep = static_cast<uint64_t>(n) *
                       binom(static_cast<uint64_t>(n - 1),
                             static_cast<uint64_t>(ctx.m - 1));
    if (opts.reps * per_rep > opts.eval_budget)
        throw too_large("estimate_Rnx: evaluation budget exceeded");

    auto tilted = build_tilted(dist, n, x);
    double kappa = tilted.normalizer();

    // First addend: tilted-measure mean of x|D1| + x^2 |D2|.
    CounterRng rng1(SeedStream{stream.seed, derive_stream(stream.stream, 1)});
    KahanSum s1, s1sq;
    std::vector<double> z(static_cast<std::size_t>(n));
    for (uint64_t r = 0; r < opts.reps; ++r) {
        for (auto& v : z)
            v = tilted.draw(rng1);
        auto bits = decomp_bits(z, k, dist, ctx, n, x, opts, false);
        double a = x * std::abs(bits.d1) + x * x * bits.d2_like;
        s1.add(a);
        s1sq.add(a * a);
    }
    double reps = static_cast<double>(opts.reps);
    double mean1 = s1.value() / reps;
    double var1 = std::max(0.0, s1sq.value() / reps - mean1 * mean1);

    // Second addend: per-i mixed measure (coordinate i stays untilted).
    CounterRng rng2(SeedStream{stream.seed, derive_stream(stream.stream, 2)});
    KahanSum s2, s2sq;
    std::vector<double> base(static_cast<std::size_t>(n));
    for (uint64_t r = 0; r < opts.reps; ++r) {
        for (auto& v : z)
            v = tilted.draw(rng2);
        for (auto& v : base)
            v = dist.draw(rng2);
        KahanSum repsum;
        for (int i = 0; i < n; ++i) {
            double keep = z[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(i)];
            auto bits = decomp_bits(z, k, dist, ctx, n, x, opts, true);
            double d1_diff = ctx.root_n *
                             std::abs(bits.psi[static_cast<std::size_t>(i)]) /
                             (ctx.m * static_cast<double>(ctx.c_nm));
            double xi_x = x * base[static_cast<std::size_t>(i)] / ctx.scale;
            double b = std::min(std::abs(xi_x), 1.0) *
                       (d1_diff + x * bits.loo_d2_diff[static_cast<std::size_t>(i)]);
            repsum.add(b);
            z[static_cast<std::size_t>(i)] = keep;
        }
        double v = repsum.value() / kappa;
        s2.add(v);
        s2sq.add(v * v);
    }
    double mean2 = s2.value() / reps;
    double var2 = std::max(0.0, s2sq.value() / reps - mean2 * mean2);

    EstimateSE out;
    out.value = mean1 + mean2;
    out.se = std::sqrt((var1 + var2) / reps);
    return out;
}

EstimateSE estimate_breve_Rnx(const DistributionSpec& dist, const KernelSpec& k,
                              int n, double x, SeedStream stream,
                              RemainderOptions opts) {
    if (x < 0.0)
        throw out_of_range("estimate_breve_Rnx: x must be >= 0");
    auto ctx = make_context(dist, k, n);
    uint64_t per_rep = static_cast<uint64_t>(n) *
                       binom(static_cast<uint64_t>(n - 1),
                             static_cast<uint64_t>(ctx.m - 1));
    if (opts.reps * per_rep > opts.eval_budget)
        throw too_large("estimate_breve_Rnx: evaluation budget exceeded");

    // D3's x^{-1} factor: breve R couples D2-like terms with weight x; at
    // x = 0 those terms vanish, so guard the division.
    double x_eff = std::max(x, 1e-12);

    CounterRng rng(stream);
    std::vector<double> z(static_cast<std::size_t>(n));
    KahanSum s, ssq;
    double cut = 1.0 / (1.0 + x);
    for (uint64_t r = 0; r < opts.reps; ++r) {
        for (auto& v : z)
            v = dist.draw(rng);
        auto bits = decomp_bits(z, k, dist, ctx, n, x_eff, opts, true);
        KahanSum repsum;
        repsum.add(std::abs(bits.d1));
        repsum.add(x * bits.d2_like);
        for (int i = 0; i < n; ++i) {
            double xi = z[static_cast<std::size_t>(i)] / ctx.scale;
            if (std::abs(xi) > cut)
                continue;
            double d1_diff = ctx.root_n *
                             std::abs(bits.psi[static_cast<std::size_t>(i)]) /
                             (ctx.m * static_cast<double>(ctx.c_nm));
            repsum.add(std::abs(xi) *
                       (d1_diff + x * bits.loo_d2_diff[static_cast<std::size_t>(i)]));
        }
        double v = repsum.value();
        s.add(v);
        ssq.add(v * v);
    }
    double reps = static_cast<double>(opts.reps);
    double mean = s.value() / reps;
    double var = std::max(0.0, ssq.value() / reps - mean * mean);

    EstimateSE out;
    out.value = L_n_1px(dist, n, x) + mean;
    out.se = std::sqrt(var / reps);
    return out;
}

double delta1_scaled(const DistributionSpec& dist, double scale) {
    if (!(scale > 0.0))
        throw invalid_parameter("delta1_scaled: scale must be > 0");
    double t = 1.0 / scale;
    return scale * scale * dist.second_moment_tail(t) +
           scale * scale * scale * dist.abs_third_below(t);
}

double f1_residual(const DistributionSpec& dist, double scale, double lambda,
                   double theta) {
    if (!(theta > 0.0))
        throw invalid_parameter("f1_residual: theta must be > 0");
    auto g = [scale, lambda, theta](double y) {
        double v = scale * y;
        return std::exp(lambda * v - theta * v * v);
    };
    double e = dist.expect(g, {}, 0.0);
    double ex2 = scale * scale * dist.variance();
    return std::abs(e - 1.0 - (0.5 * lambda * lambda - theta) * ex2);
}

} // namespace selfnorm
