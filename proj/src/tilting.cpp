#include "selfnorm/tilting.hpp"

#include "selfnorm/common.hpp"
#include "selfnorm/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace selfnorm {

namespace {

// Fritsch-Carlson monotone cubic slopes for strictly increasing data.
std::vector<double> pchip_slopes(const std::vector<double>& x,
                                 const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2)
        return d;
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            double w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
            double w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // Clamp endpoints to keep monotonicity.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) {
            d[i] = 0.0;
            d[i + 1] = 0.0;
        }
    }
    return d;
}

double hermite(double x0, double x1, double y0, double y1, double d0, double d1,
               double x) {
    double h = x1 - x0;
    double t = (x - x0) / h;
    double t2 = t * t, t3 = t2 * t;
    return y0 * (2.0 * t3 - 3.0 * t2 + 1.0) + h * d0 * (t3 - 2.0 * t2 + t) +
           y1 * (-2.0 * t3 + 3.0 * t2) + h * d1 * (t3 - t2);
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys,
              const std::vector<double>& ds, double x) {
    if (x <= xs.front())
        return ys.front();
    if (x >= xs.back())
        return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
    return hermite(xs[k], xs[k + 1], ys[k], ys[k + 1], ds[k], ds[k + 1], x);
}

struct Segment {
    double lo, hi, mass;
};
struct ByMass {
    bool operator()(const Segment& a, const Segment& b) const {
        return a.mass < b.mass;
    }
};

} // namespace

TiltedDistribution build_tilted(const DistributionSpec& dist, int n, double x,
                                int grid_size) {
    if (x < 0.0)
        throw out_of_range("build_tilted: x must be >= 0");
    if (grid_size < 256)
        throw invalid_parameter("build_tilted: grid_size must be >= 256");

    TiltedDistribution t(dist);
    t.n_ = n;
    t.x_ = x;
    t.scale_ = dist.sd() * std::sqrt(static_cast<double>(n));

    auto weight = [&t](double y) { return std::exp(t.g(y)); };

    if (dist.is_discrete()) {
        KahanSum z;
        for (const auto& a : dist.atoms())
            z.add(a.p * weight(a.x));
        t.normalizer_ = z.value();
        t.log_normalizer_ = std::log(t.normalizer_);
        double cum = 0.0;
        for (const auto& a : dist.atoms()) {
            double p = a.p * weight(a.x) / t.normalizer_;
            t.atoms_.push_back({a.x, p});
            cum += p;
            t.atom_cum_.push_back(cum);
        }
        t.atom_cum_.back() = 1.0;
        KahanSum m1, m2, m3;
        for (const auto& a : t.atoms_) {
            double yv = t.g(a.x);
            m1.add(a.p * yv);
            m2.add(a.p * yv * yv);
            m3.add(a.p * std::abs(yv * yv * yv));
        }
        double mean = m1.value();
        t.moments_ = {n * mean, n * (m2.value() - mean * mean), n * m3.value()};
        return t;
    }

    // Alive region: both the base mass and the tilt factor must be
    // non-negligible. g(y) = u - u^2/2 at u = x y / scale drops below -760
    // outside u in (-38, 40).
    double lo = dist.support_lo();
    double hi = dist.support_hi();
    double qlo = dist.quantile(1e-15);
    double qhi = dist.quantile(1.0 - 1e-15);
    double a = std::max(std::isfinite(lo) ? lo : -kInf, qlo);
    double b = std::min(std::isfinite(hi) ? hi : kInf, qhi);
    if (x > 0.0) {
        a = std::max(a, -38.0 * t.scale_ / x);
        b = std::min(b, 40.0 * t.scale_ / x);
    }
    if (!(a < b))
        throw invalid_parameter("build_tilted: empty effective support");

    auto dens = [&](double y) { return weight(y) * dist.density(y); };
    QuadOptions piece{1e-14, 48};

    // Mass-balanced refinement: start from a coarse partition seeded at the
    // tilt peak and truncation points, keep splitting the heaviest segment.
    std::priority_queue<Segment, std::vector<Segment>, ByMass> heap;
    std::vector<double> seeds;
    const int kCoarse = 64;
    for (int i = 0; i <= kCoarse; ++i)
        seeds.push_back(a + (b - a) * i / kCoarse);
    if (x > 0.0) {
        for (double s : {t.scale_ / x, -t.scale_ / x, 2.0 * t.scale_ / x})
            if (s > a && s < b)
                seeds.push_back(s);
    }
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    int nseg = static_cast<int>(seeds.size()) - 1;
    for (int i = 0; i < nseg; ++i)
        heap.push({seeds[static_cast<std::size_t>(i)],
                   seeds[static_cast<std::size_t>(i) + 1],
                   integrate(dens, seeds[static_cast<std::size_t>(i)],
                             seeds[static_cast<std::size_t>(i) + 1], piece)});
    while (nseg < grid_size - 1) {
        Segment s = heap.top();
        if (s.mass <= 1e-15 || s.hi - s.lo < 1e-13 * (b - a))
            break;
        heap.pop();
        double mid = 0.5 * (s.lo + s.hi);
        heap.push({s.lo, mid, integrate(dens, s.lo, mid, piece)});
        heap.push({mid, s.hi, integrate(dens, mid, s.hi, piece)});
        ++nseg;
    }

    std::vector<Segment> segs;
    segs.reserve(static_cast<std::size_t>(nseg));
    while (!heap.empty()) {
        segs.push_back(heap.top());
        heap.pop();
    }
    std::sort(segs.begin(), segs.end(),
              [](const Segment& u, const Segment& v) { return u.lo < v.lo; });

    KahanSum mass;
    std::vector<double> ys_all{segs.front().lo};
    std::vector<double> cum{0.0};
    for (const auto& s : segs) {
        mass.add(s.mass);
        ys_all.push_back(s.hi);
        cum.push_back(mass.value());
    }
    t.normalizer_ = mass.value();
    if (!(t.normalizer_ > 0.0))
        throw invalid_parameter("build_tilted: zero tilted mass");
    t.log_normalizer_ = std::log(t.normalizer_);

    // Nodes with strictly increasing V; interpolation needs strictness in
    // both directions.
    t.ys_.push_back(ys_all.front());
    t.vs_.push_back(0.0);
    for (std::size_t i = 1; i < ys_all.size(); ++i) {
        double v = std::min(1.0, cum[i] / t.normalizer_);
        if (i + 1 == ys_all.size())
            v = 1.0;
        if (v > t.vs_.back() + 1e-15) {
            t.ys_.push_back(ys_all[i]);
            t.vs_.push_back(v);
        }
    }
    t.vs_.back() = 1.0;
    t.slopes_inv_ = pchip_slopes(t.vs_, t.ys_);
    t.slopes_fwd_ = pchip_slopes(t.ys_, t.vs_);

    // Exact tilted moments via dedicated quadratures.
    QuadOptions mopts{1e-13, 52};
    std::vector<double> splits;
    if (x > 0.0) {
        for (double s : {t.scale_ / x, -t.scale_ / x})
            if (s > a && s < b)
                splits.push_back(s);
    }
    auto moment = [&](auto f) {
        return integrate_split(f, a, b, splits, mopts) / t.normalizer_;
    };
    double m1 = moment([&](double y) { return t.g(y) * dens(y); });
    double m2 = moment([&](double y) {
        double yv = t.g(y);
        return yv * yv * dens(y);
    });
    double m3 = moment([&](double y) {
        double yv = t.g(y);
        return std::abs(yv * yv * yv) * dens(y);
    });
    t.moments_ = {n * m1, n * (m2 - m1 * m1), n * m3};
    return t;
}

double TiltedDistribution::cdf(double y) const {
    if (is_discrete()) {
        double acc = 0.0;
        for (const auto& a : atoms_)
            if (a.x <= y)
                acc += a.p;
        return acc;
    }
    return std::clamp(interp(ys_, vs_, slopes_fwd_, y), 0.0, 1.0);
}

double TiltedDistribution::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0))
        throw out_of_range("quantile: u must lie in (0,1)");
    if (is_discrete()) {
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            if (u <= atom_cum_[i])
                return atoms_[i].x;
        return atoms_.back().x;
    }
    return interp(vs_, ys_, slopes_inv_, u);
}

std::vector<double> sample_tilted(const TiltedDistribution& tilted, std::size_t count,
                                  SeedStream stream) {
    CounterRng rng(stream);
    std::vector<double> out(count);
    for (auto& v : out)
        v = tilted.draw(rng);
    return out;
}

StatisticFn self_normalized_statistic() {
    return [](std::span<const double> s) {
        KahanSum sum, sq;
        for (double v : s) {
            sum.add(v);
            sq.add(v * v);
        }
        double vn = std::sqrt(sq.value());
        if (vn == 0.0)
            return 0.0;
        return sum.value() / vn;
    };
}

StatisticFn make_studentized_u_statistic(KernelSpec kernel, double theta) {
    return [kernel = std::move(kernel), theta](std::span<const double> s) {
        return studentized_u_value(s, kernel, theta);
    };
}

StatisticFn make_generic_statistic(const DistributionSpec& dist, int n, double c1,
                                   double c2) {
    double scale = dist.sd() * std::sqrt(static_cast<double>(n));
    return [scale, c1, c2](std::span<const double> s) {
        KahanSum w, v2;
        for (double y : s) {
            double xi = y / scale;
            w.add(xi);
            v2.add(xi * xi);
        }
        double vv = v2.value();
        double d1 = c1 * (vv - 1.0);
        double d2 = c2 * (vv - 1.0);
        double denom = std::sqrt(vv) * std::sqrt(std::max(1.0 + d2, 1e-300));
        if (denom == 0.0)
            return 0.0;
        return (w.value() + d1) / denom;
    };
}

TailEstimate estimate_tail_plain(const DistributionSpec& dist,
                                 const StatisticFn& statistic, int n, double x,
                                 uint64_t reps, SeedStream stream) {
    if (reps < 100)
        throw invalid_parameter("estimate_tail_plain: reps must be >= 100");
    CounterRng rng(stream);
    std::vector<double> s(static_cast<std::size_t>(n));
    uint64_t hits = 0;
    for (uint64_t r = 0; r < reps; ++r) {
        for (auto& v : s)
            v = dist.draw(rng);
        if (statistic(s) >= x)
            ++hits;
    }
    TailEstimate out;
    out.method = "plain";
    out.reps = reps;
    out.hits = hits;
    out.estimate = static_cast<double>(hits) / static_cast<double>(reps);
    out.se = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(reps));
    out.ess = static_cast<double>(hits);
    out.sum_w = static_cast<double>(reps);
    out.sum_w2 = static_cast<double>(reps);
    out.sum_v = static_cast<double>(hits);
    out.sum_v2 = static_cast<double>(hits);
    return out;
}

TailEstimate estimate_tail_tilted(const TiltedDistribution& tilted,
                                  const EventFn& event, uint64_t reps,
                                  SeedStream stream, double min_ess) {
    if (reps < 100)
        throw invalid_parameter("estimate_tail_tilted: reps must be >= 100");
    CounterRng rng(stream);
    const int n = tilted.n();
    const double log_i = n * tilted.log_normalizer();
    std::vector<double> s(static_cast<std::size_t>(n));
    KahanSum sv, sv2, sw, sw2;
    for (uint64_t r = 0; r < reps; ++r) {
        double gsum = 0.0;
        for (auto& v : s) {
            v = tilted.draw(rng);
            gsum += tilted.g(v);
        }
        double w = std::exp(log_i - gsum); // log-space weight
        sw.add(w);
        sw2.add(w * w);
        if (event(s)) {
            sv.add(w);
            sv2.add(w * w);
        }
    }
    TailEstimate out;
    out.method = "tilted";
    out.reps = reps;
    out.sum_v = sv.value();
    out.sum_v2 = sv2.value();
    out.sum_w = sw.value();
    out.sum_w2 = sw2.value();
    double nrep = static_cast<double>(reps);
    out.estimate = out.sum_v / nrep;
    double var = std::max(0.0, out.sum_v2 / nrep - out.estimate * out.estimate);
    out.se = std::sqrt(var / nrep);
    // effective count of draws that contribute to the event estimate
    out.ess = out.sum_v2 > 0.0 ? out.sum_v * out.sum_v / out.sum_v2 : 0.0;
    if (out.ess < min_ess)
        throw degenerate_weights("estimate_tail_tilted: effective sample size < " +
                                 std::to_string(min_ess));
    return out;
}

} // namespace selfnorm
