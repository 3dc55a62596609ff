#include "selfnorm/kernels.hpp"

#include "selfnorm/common.hpp"

#include <algorithm>
#include <cmath>

namespace selfnorm {

double KernelSpec::eval(std::span<const double> args) const {
    if (static_cast<int>(args.size()) != degree_)
        throw arity_mismatch(name_ + ": expected " + std::to_string(degree_) +
                             " arguments, got " + std::to_string(args.size()));
    return eval_(args);
}

double KernelSpec::theta(const DistributionSpec& dist) const {
    switch (builtin_) {
    case BuiltinKernel::t:
        return 0.0; // centered laws
    case BuiltinKernel::variance:
        return dist.variance();
    case BuiltinKernel::gini:
        return dist.expect([&](double y) { return h1(dist, y); }, {0.0}, 1.0);
    case BuiltinKernel::wilcoxon:
        return dist.expect([&](double y) { return dist.cdf(-y); }, {}, 0.0);
    case BuiltinKernel::none:
        break;
    }
    throw unknown_kernel(name_ + ": theta requires an analytic registration");
}

bool KernelSpec::has_analytic_h1() const { return builtin_ != BuiltinKernel::none; }

double KernelSpec::h1(const DistributionSpec& dist, double y) const {
    switch (builtin_) {
    case BuiltinKernel::t:
        return 0.5 * y; // E[(y + X)/2] with E X = 0
    case BuiltinKernel::variance:
        return 0.5 * (y * y + dist.variance());
    case BuiltinKernel::gini:
        // E|y - X| = y(2F(y) - 1) - 2 E[X 1{X<=y}]
        return y * (2.0 * dist.cdf(y) - 1.0) - 2.0 * dist.partial_mean(y);
    case BuiltinKernel::wilcoxon:
        return dist.cdf(-y); // P(y + X <= 0)
    case BuiltinKernel::none:
        break;
    }
    throw unknown_kernel(name_ + ": no analytic h1; use h1_projection");
}

double KernelSpec::sigma2(const DistributionSpec& dist) const {
    switch (builtin_) {
    case BuiltinKernel::t:
        return 0.25 * dist.variance();
    case BuiltinKernel::variance: {
        double mu4 = dist.fourth_moment();
        if (std::isinf(mu4))
            return kInf;
        return 0.25 * (mu4 - dist.variance() * dist.variance());
    }
    case BuiltinKernel::gini: {
        double th = theta(dist);
        double m2 = dist.expect(
            [&](double y) {
                double v = h1(dist, y);
                return v * v;
            },
            {0.0}, 2.0);
        return std::isinf(m2) ? kInf : m2 - th * th;
    }
    case BuiltinKernel::wilcoxon: {
        double th = theta(dist);
        double m2 = dist.expect(
            [&](double y) {
                double v = dist.cdf(-y);
                return v * v;
            },
            {}, 0.0);
        return m2 - th * th;
    }
    case BuiltinKernel::none:
        break;
    }
    throw unknown_kernel(name_ + ": sigma2 requires an analytic registration");
}

double KernelSpec::sigma_h2(const DistributionSpec& dist) const {
    double var = dist.variance();
    switch (builtin_) {
    case BuiltinKernel::t:
        return 0.5 * var;
    case BuiltinKernel::variance: {
        double mu4 = dist.fourth_moment();
        return std::isinf(mu4) ? kInf : 0.5 * (mu4 + var * var);
    }
    case BuiltinKernel::gini: {
        double th = theta(dist);
        return 2.0 * var - th * th; // E(X1-X2)^2 - theta^2
    }
    case BuiltinKernel::wilcoxon: {
        double th = theta(dist);
        return th * (1.0 - th);
    }
    case BuiltinKernel::none:
        break;
    }
    throw unknown_kernel(name_ + ": sigma_h2 requires an analytic registration");
}

double KernelSpec::sigma_p(const DistributionSpec& dist, double p) const {
    if (!(p > 2.0 && p <= 3.0))
        throw out_of_range("sigma_p: p must lie in (2,3]");
    double th = theta(dist);
    double growth;
    std::vector<double> splits{0.0};
    switch (builtin_) {
    case BuiltinKernel::t:
    case BuiltinKernel::gini:
        growth = p;
        break;
    case BuiltinKernel::variance: {
        growth = 2.0 * p;
        double sd = dist.sd();
        splits = {-sd, sd};
        break;
    }
    case BuiltinKernel::wilcoxon:
        growth = 0.0;
        splits = {};
        break;
    default:
        throw unknown_kernel(name_ + ": sigma_p requires an analytic registration");
    }
    double mp = dist.expect(
        [&](double y) { return std::pow(std::abs(h1(dist, y) - th), p); }, splits,
        growth);
    return std::isinf(mp) ? kInf : std::pow(mp, 1.0 / p);
}

KernelConstants KernelSpec::kc(const DistributionSpec& dist) const {
    if (!c0_)
        throw unknown_kernel(name_ + ": no (c0, tau) registered");
    if (tau_)
        return {*c0_, *tau_};
    double th = theta(dist);
    double s2 = sigma2(dist);
    if (!std::isfinite(s2))
        throw infinite_moment(name_ + ": sigma^2 diverges under " + dist.name());
    if (s2 <= 1e-12)
        throw degenerate_kernel(name_ + ": sigma^2 ~ 0 under " + dist.name());
    switch (builtin_) {
    case BuiltinKernel::variance:
    case BuiltinKernel::gini:
        return {*c0_, th * th / s2};
    case BuiltinKernel::wilcoxon:
        return {*c0_, 1.0 / s2};
    default:
        return {*c0_, 0.0};
    }
}

KernelSpec builtin_kernel(const std::string& name) {
    KernelSpec k;
    k.degree_ = 2;
    if (name == "t") {
        k.builtin_ = BuiltinKernel::t;
        k.eval_ = [](std::span<const double> a) { return 0.5 * (a[0] + a[1]); };
        k.c0_ = 2.0;
        k.tau_ = 0.0;
    } else if (name == "variance") {
        k.builtin_ = BuiltinKernel::variance;
        k.eval_ = [](std::span<const double> a) {
            double d = a[0] - a[1];
            return 0.5 * d * d;
        };
        k.c0_ = 10.0;
    } else if (name == "gini") {
        k.builtin_ = BuiltinKernel::gini;
        k.eval_ = [](std::span<const double> a) { return std::abs(a[0] - a[1]); };
        k.c0_ = 8.0;
    } else if (name == "wilcoxon") {
        k.builtin_ = BuiltinKernel::wilcoxon;
        k.eval_ = [](std::span<const double> a) {
            return a[0] + a[1] <= 0.0 ? 1.0 : 0.0;
        };
        k.c0_ = 1.0;
    } else {
        throw unknown_kernel("unknown built-in kernel: " + name);
    }
    k.name_ = name;
    return k;
}

KernelSpec make_kernel(std::string name, int degree, KernelSpec::Eval eval,
                       std::optional<double> c0, std::optional<double> tau) {
    if (degree < 2)
        throw invalid_parameter("kernel degree must be >= 2");
    if (c0 && *c0 < 1.0)
        throw invalid_parameter("kernel c0 must be >= 1");
    KernelSpec k;
    k.name_ = std::move(name);
    k.degree_ = degree;
    k.eval_ = std::move(eval);
    k.c0_ = c0;
    k.tau_ = tau;
    return k;
}

ProjectionEstimate h1_projection(const KernelSpec& k, const DistributionSpec& dist,
                                 double y, int inner_reps, SeedStream stream) {
    if (k.has_analytic_h1())
        return {k.h1(dist, y), 0.0};
    if (inner_reps < 1)
        throw invalid_parameter("h1_projection: inner_reps must be >= 1");

    CounterRng rng(stream);
    std::vector<double> args(static_cast<std::size_t>(k.degree()));
    args[0] = y;
    KahanSum sum, sum2;
    for (int r = 0; r < inner_reps; ++r) {
        for (int j = 1; j < k.degree(); ++j)
            args[static_cast<std::size_t>(j)] = dist.draw(rng);
        double v = k.eval(args);
        sum.add(v);
        sum2.add(v * v);
    }
    double mean = sum.value() / inner_reps;
    double var = std::max(0.0, sum2.value() / inner_reps - mean * mean);
    double se = inner_reps > 1 ? std::sqrt(var / (inner_reps - 1)) : 0.0;
    return {mean, se};
}

namespace {

// Deterministic stress tuples: every m-fold combination of +-{1,2,4,8} sigma
// (atom values for discrete laws, which have bounded support).
std::vector<std::vector<double>> stress_grid(const DistributionSpec& dist, int m) {
    std::vector<double> pts;
    if (dist.is_discrete()) {
        for (const auto& a : dist.atoms())
            pts.push_back(a.x);
    }
    for (double mult : {1.0, 2.0, 4.0, 8.0}) {
        pts.push_back(mult * dist.sd());
        pts.push_back(-mult * dist.sd());
    }
    std::vector<std::vector<double>> tuples;
    std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
    const std::size_t base = pts.size();
    while (true) {
        std::vector<double> tup(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
            tup[static_cast<std::size_t>(j)] = pts[idx[static_cast<std::size_t>(j)]];
        tuples.push_back(std::move(tup));
        int j = m - 1;
        while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == base) {
            idx[static_cast<std::size_t>(j)] = 0;
            --j;
        }
        if (j < 0)
            break;
    }
    return tuples;
}

} // namespace

ViolationReport check_condition_kc(const KernelSpec& k, const DistributionSpec& dist,
                                   double c0, double tau, uint64_t trials,
                                   SeedStream stream) {
    if (trials < 1)
        throw invalid_parameter("check_condition_kc: trials must be >= 1");
    const int m = k.degree();
    const double th = k.theta(dist);
    const double s2 = k.sigma2(dist);
    if (!std::isfinite(s2))
        throw infinite_moment(k.name() + ": sigma^2 diverges under " + dist.name());

    ViolationReport rep;
    rep.worst_margin = kInf;
    auto consider = [&](std::span<const double> args) {
        double lhs = k.eval(args) - th;
        lhs *= lhs;
        double rhs = tau * s2;
        for (double a : args) {
            double d = k.h1(dist, a) - th;
            rhs += d * d;
        }
        rhs *= c0;
        double margin = rhs - lhs;
        ++rep.trials;
        if (margin < 0.0)
            ++rep.violations;
        if (margin < rep.worst_margin) {
            rep.worst_margin = margin;
            rep.witness.assign(args.begin(), args.end());
        }
    };

    CounterRng rng(stream);
    std::vector<double> args(static_cast<std::size_t>(m));
    for (uint64_t t = 0; t < trials; ++t) {
        for (auto& a : args)
            a = dist.draw(rng);
        consider(args);
    }
    for (const auto& tup : stress_grid(dist, m))
        consider(tup);
    return rep;
}

double empirical_min_c0(const KernelSpec& k, const DistributionSpec& dist, double tau,
                        uint64_t trials, SeedStream stream) {
    const int m = k.degree();
    const double th = k.theta(dist);
    const double s2 = k.sigma2(dist);
    if (!std::isfinite(s2))
        throw infinite_moment(k.name() + ": sigma^2 diverges under " + dist.name());

    double sup = 1.0; // c0 >= 1 by assumption
    auto consider = [&](std::span<const double> args) {
        double lhs = k.eval(args) - th;
        lhs *= lhs;
        double denom = tau * s2;
        for (double a : args) {
            double d = k.h1(dist, a) - th;
            denom += d * d;
        }
        if (denom > 0.0)
            sup = std::max(sup, lhs / denom);
    };

    CounterRng rng(stream);
    std::vector<double> args(static_cast<std::size_t>(m));
    for (uint64_t t = 0; t < trials; ++t) {
        for (auto& a : args)
            a = dist.draw(rng);
        consider(args);
    }
    for (const auto& tup : stress_grid(dist, m))
        consider(tup);
    return sup;
}

} // namespace selfnorm
