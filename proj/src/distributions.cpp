#include "selfnorm/distributions.hpp"

#include "selfnorm/common.hpp"
#include "selfnorm/normal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace selfnorm {

namespace {

double lookup(const Params& params, const char* key, double fallback,
              std::vector<std::string>& seen) {
    seen.emplace_back(key);
    for (const auto& p : params)
        if (p.name == key)
            return p.value;
    return fallback;
}

void reject_unknown(const Params& params, const std::vector<std::string>& seen) {
    for (const auto& p : params) {
        if (std::find(seen.begin(), seen.end(), p.name) == seen.end())
            throw invalid_parameter("unknown distribution parameter: " + p.name);
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Unit-rate exponential helpers; X = (E - 1)/lambda.
// int_0^B (e-1) e^-e de = -B e^-B
double exp1_partial_mean(double b) { return -b * std::exp(-b); }
// int_A^inf (e-1)^2 e^-e de = e^-A ((A-1)^2 + 2(A-1) + 2)
double exp1_sq_upper(double a) {
    double u = a - 1.0;
    return std::exp(-a) * (u * u + 2.0 * u + 2.0);
}

} // namespace

DistributionSpec make_distribution(Family family, const Params& params) {
    DistributionSpec d;
    d.family_ = family;
    std::vector<std::string> seen;

    switch (family) {
    case Family::normal: {
        double sigma = lookup(params, "sigma", 1.0, seen);
        reject_unknown(params, seen);
        if (!(sigma > 0.0))
            throw invalid_parameter("normal: sigma must be > 0");
        d.p0_ = sigma;
        d.variance_ = sigma * sigma;
        d.lo_ = -kInf;
        d.hi_ = kInf;
        d.name_ = "normal(sigma=" + fmt(sigma) + ")";
        break;
    }
    case Family::exponential_centered: {
        double lambda = lookup(params, "lambda", 1.0, seen);
        reject_unknown(params, seen);
        if (!(lambda > 0.0))
            throw invalid_parameter("exponential-centered: lambda must be > 0");
        d.p0_ = lambda;
        d.variance_ = 1.0 / (lambda * lambda);
        d.lo_ = -1.0 / lambda;
        d.hi_ = kInf;
        d.name_ = "exponential-centered(lambda=" + fmt(lambda) + ")";
        break;
    }
    case Family::rademacher: {
        reject_unknown(params, seen);
        d.variance_ = 1.0;
        d.lo_ = -1.0;
        d.hi_ = 1.0;
        d.atoms_ = {{-1.0, 0.5}, {1.0, 0.5}};
        d.name_ = "rademacher";
        break;
    }
    case Family::uniform_centered: {
        double a = lookup(params, "half-width", std::sqrt(3.0), seen);
        reject_unknown(params, seen);
        if (!(a > 0.0))
            throw invalid_parameter("uniform-centered: half-width must be > 0");
        d.p0_ = a;
        d.variance_ = a * a / 3.0;
        d.lo_ = -a;
        d.hi_ = a;
        d.name_ = "uniform-centered(half-width=" + fmt(a) + ")";
        break;
    }
    case Family::pareto_centered: {
        double alpha = lookup(params, "alpha", 2.5, seen);
        double xm = lookup(params, "xm", 1.0, seen);
        reject_unknown(params, seen);
        if (!(alpha > 2.0))
            throw invalid_parameter(
                "pareto-centered: alpha must be > 2 (finite variance)");
        if (!(xm > 0.0))
            throw invalid_parameter("pareto-centered: xm must be > 0");
        d.p0_ = alpha;
        d.p1_ = xm;
        double mu = alpha * xm / (alpha - 1.0);
        d.variance_ = alpha * xm * xm / ((alpha - 1.0) * (alpha - 1.0) * (alpha - 2.0));
        d.lo_ = xm - mu;
        d.hi_ = kInf;
        d.name_ = "pareto-centered(alpha=" + fmt(alpha) + ",xm=" + fmt(xm) + ")";
        break;
    }
    case Family::two_point: {
        double p = lookup(params, "p", 0.8, seen);
        double s = lookup(params, "scale", 1.0, seen);
        reject_unknown(params, seen);
        if (!(p > 0.0 && p < 1.0))
            throw invalid_parameter("two-point: p must lie in (0,1)");
        if (!(s > 0.0))
            throw invalid_parameter("two-point: scale must be > 0");
        d.p0_ = p;
        d.p1_ = s;
        double pos = s * std::sqrt((1.0 - p) / p);
        double neg = -s * std::sqrt(p / (1.0 - p));
        d.variance_ = s * s;
        d.lo_ = neg;
        d.hi_ = pos;
        d.atoms_ = {{neg, 1.0 - p}, {pos, p}};
        d.name_ = "two-point(p=" + fmt(p) + ",scale=" + fmt(s) + ")";
        break;
    }
    }
    d.sd_ = std::sqrt(d.variance_);
    return d;
}

Family family_from_name(const std::string& name) {
    if (name == "normal") return Family::normal;
    if (name == "exponential-centered") return Family::exponential_centered;
    if (name == "rademacher") return Family::rademacher;
    if (name == "uniform-centered") return Family::uniform_centered;
    if (name == "pareto-centered") return Family::pareto_centered;
    if (name == "two-point") return Family::two_point;
    throw invalid_parameter("unknown distribution family: " + name);
}

std::string family_name(Family f) {
    switch (f) {
    case Family::normal: return "normal";
    case Family::exponential_centered: return "exponential-centered";
    case Family::rademacher: return "rademacher";
    case Family::uniform_centered: return "uniform-centered";
    case Family::pareto_centered: return "pareto-centered";
    case Family::two_point: return "two-point";
    }
    return "?";
}

DistributionSpec make_distribution(const std::string& family_name, const Params& params) {
    return make_distribution(family_from_name(family_name), params);
}

bool DistributionSpec::is_discrete() const {
    return family_ == Family::rademacher || family_ == Family::two_point;
}

const std::vector<Atom>& DistributionSpec::atoms() const {
    if (!is_discrete())
        throw discrete_law(name_ + ": atoms() requires a discrete family");
    return atoms_;
}

double DistributionSpec::density(double y) const {
    switch (family_) {
    case Family::normal:
        return normal_pdf(y / p0_) / p0_;
    case Family::exponential_centered: {
        double b = 1.0 + p0_ * y;
        return b < 0.0 ? 0.0 : p0_ * std::exp(-b);
    }
    case Family::uniform_centered:
        return std::abs(y) <= p0_ ? 0.5 / p0_ : 0.0;
    case Family::pareto_centered: {
        double alpha = p0_, xm = p1_;
        double z = y + alpha * xm / (alpha - 1.0);
        return z < xm ? 0.0 : alpha * std::pow(xm, alpha) * std::pow(z, -alpha - 1.0);
    }
    case Family::rademacher:
    case Family::two_point:
        throw discrete_law(name_ + ": density undefined for a discrete law");
    }
    return 0.0;
}

double DistributionSpec::cdf(double y) const {
    switch (family_) {
    case Family::normal:
        return normal_cdf(y / p0_);
    case Family::exponential_centered: {
        double b = 1.0 + p0_ * y;
        return b < 0.0 ? 0.0 : -std::expm1(-b);
    }
    case Family::uniform_centered:
        if (y <= -p0_) return 0.0;
        if (y >= p0_) return 1.0;
        return 0.5 * (y / p0_ + 1.0);
    case Family::pareto_centered: {
        double alpha = p0_, xm = p1_;
        double z = y + alpha * xm / (alpha - 1.0);
        return z < xm ? 0.0 : 1.0 - std::pow(xm / z, alpha);
    }
    case Family::rademacher:
    case Family::two_point: {
        double acc = 0.0;
        for (const auto& a : atoms_)
            if (a.x <= y)
                acc += a.p;
        return acc;
    }
    }
    return 0.0;
}

double DistributionSpec::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0))
        throw out_of_range("quantile: u must lie in (0,1)");
    switch (family_) {
    case Family::normal:
        return p0_ * normal_quantile(u);
    case Family::exponential_centered:
        return (-std::log1p(-u) - 1.0) / p0_;
    case Family::uniform_centered:
        return p0_ * (2.0 * u - 1.0);
    case Family::pareto_centered: {
        double alpha = p0_, xm = p1_;
        return xm * std::pow(1.0 - u, -1.0 / alpha) - alpha * xm / (alpha - 1.0);
    }
    case Family::rademacher:
    case Family::two_point: {
        double acc = 0.0;
        for (const auto& a : atoms_) {
            acc += a.p;
            if (u <= acc)
                return a.x;
        }
        return atoms_.back().x;
    }
    }
    return 0.0;
}

double DistributionSpec::partial_mean(double y) const {
    switch (family_) {
    case Family::normal:
        return -p0_ * normal_pdf(y / p0_);
    case Family::exponential_centered: {
        double b = 1.0 + p0_ * y;
        return b < 0.0 ? 0.0 : exp1_partial_mean(b) / p0_;
    }
    case Family::uniform_centered: {
        if (y <= -p0_) return 0.0;
        if (y >= p0_) return 0.0;
        return (y * y - p0_ * p0_) / (4.0 * p0_);
    }
    case Family::pareto_centered: {
        double alpha = p0_, xm = p1_;
        double mu = alpha * xm / (alpha - 1.0);
        double z = y + mu;
        if (z <= xm) return 0.0;
        auto f1 = [&](double t) {
            return alpha * std::pow(xm, alpha) *
                   (-std::pow(t, 1.0 - alpha) / (alpha - 1.0) +
                    mu * std::pow(t, -alpha) / alpha);
        };
        return f1(z) - f1(xm);
    }
    case Family::rademacher:
    case Family::two_point: {
        double acc = 0.0;
        for (const auto& a : atoms_)
            if (a.x <= y)
                acc += a.x * a.p;
        return acc;
    }
    }
    return 0.0;
}

double DistributionSpec::second_moment_tail(double t) const {
    if (t <= 0.0)
        return variance_;
    switch (family_) {
    case Family::normal: {
        double z = t / p0_;
        return 2.0 * variance_ * (z * normal_pdf(z) + normal_tail(z));
    }
    case Family::exponential_centered: {
        double s = p0_ * t; // threshold in unit-rate coordinates for |E-1|
        double upper = exp1_sq_upper(1.0 + s);
        double lower = 0.0;
        if (s < 1.0) {
            // int_0^B (e-1)^2 e^-e de = 1 - e^-B (B^2 + 1)
            double b = 1.0 - s;
            lower = 1.0 - std::exp(-b) * (b * b + 1.0);
        }
        return (upper + lower) / (p0_ * p0_);
    }
    case Family::uniform_centered:
        return t >= p0_ ? 0.0 : (p0_ * p0_ * p0_ - t * t * t) / (3.0 * p0_);
    case Family::pareto_centered: {
        double alpha = p0_, xm = p1_;
        double mu = alpha * xm / (alpha - 1.0);
        double c = alpha * std::pow(xm, alpha);
        double a = t + mu;
        double upper = c * (std::pow(a, 2.0 - alpha) / (alpha - 2.0) -
                            2.0 * mu * std::pow(a, 1.0 - alpha) / (alpha - 1.0) +
                            mu * mu * std::pow(a, -alpha) / alpha);
        double lower = 0.0;
        double b = mu - t;
        if (b > xm) {
            auto f2 = [&](double z) {
                return c * (std::pow(z, 2.0 - alpha) / (2.0 - alpha) +
                            2.0 * mu * std::pow(z, 1.0 - alpha) / (alpha - 1.0) -
                            mu * mu * std::pow(z, -alpha) / alpha);
            };
            lower = f2(b) - f2(xm);
        }
        return upper + lower;
    }
    case Family::rademacher:
    case Family::two_point: {
        double acc = 0.0;
        for (const auto& a : atoms_)
            if (std::abs(a.x) > t)
                acc += a.x * a.x * a.p;
        return acc;
    }
    }
    return 0.0;
}

double DistributionSpec::abs_third_below(double t) const {
    if (t <= 0.0)
        return 0.0;
    switch (family_) {
    case Family::normal: {
        double z = t / p0_;
        double s3 = variance_ * p0_;
        return 2.0 * s3 * (2.0 * normal_pdf(0.0) - (z * z + 2.0) * normal_pdf(z));
    }
    case Family::rademacher:
    case Family::two_point: {
        double acc = 0.0;
        for (const auto& a : atoms_)
            if (std::abs(a.x) <= t)
                acc += std::abs(a.x * a.x * a.x) * a.p;
        return acc;
    }
    default: {
        double lo = std::max(lo_, -t);
        double hi = std::min(hi_, t);
        if (hi <= lo)
            return 0.0;
        auto g = [this](double y) { return std::abs(y * y * y) * density(y); };
        return integrate_split(g, lo, hi, {0.0});
    }
    }
}

double DistributionSpec::abs_moment(double p) const {
    switch (family_) {
    case Family::normal:
        return std::pow(p0_, p) * std::exp((p / 2.0) * std::log(2.0) +
                                           std::lgamma((p + 1.0) / 2.0) -
                                           0.5 * std::log(kPi));
    case Family::rademacher:
        return 1.0;
    case Family::uniform_centered:
        return std::pow(p0_, p) / (p + 1.0);
    case Family::two_point: {
        double acc = 0.0;
        for (const auto& a : atoms_)
            acc += std::pow(std::abs(a.x), p) * a.p;
        return acc;
    }
    case Family::pareto_centered:
        if (p >= p0_)
            return kInf;
        [[fallthrough]];
    case Family::exponential_centered: {
        auto g = [this, p](double y) { return std::pow(std::abs(y), p) * density(y); };
        return expect(g, {0.0}, p);
    }
    }
    return 0.0;
}

bool DistributionSpec::abs_third_closed_form() const {
    switch (family_) {
    case Family::normal:
    case Family::rademacher:
    case Family::uniform_centered:
    case Family::two_point:
        return true;
    default:
        return false; // quadrature-backed (or divergent for pareto alpha <= 3)
    }
}

double DistributionSpec::sigma_p(double p) const {
    double m = abs_moment(p);
    return std::isinf(m) ? kInf : std::pow(m, 1.0 / p);
}

double DistributionSpec::fourth_moment() const {
    switch (family_) {
    case Family::normal:
        return 3.0 * variance_ * variance_;
    case Family::exponential_centered:
        return 9.0 / std::pow(p0_, 4.0);
    case Family::rademacher:
        return 1.0;
    case Family::uniform_centered:
        return std::pow(p0_, 4.0) / 5.0;
    case Family::two_point: {
        double acc = 0.0;
        for (const auto& a : atoms_)
            acc += std::pow(a.x, 4.0) * a.p;
        return acc;
    }
    case Family::pareto_centered:
        return p0_ > 4.0 ? abs_moment(4.0) : kInf;
    }
    return 0.0;
}

double DistributionSpec::expect(const Integrand& g, std::vector<double> splits,
                                double growth_degree) const {
    if (is_discrete()) {
        KahanSum acc;
        for (const auto& a : atoms_)
            acc.add(g(a.x) * a.p);
        return acc.value();
    }

    auto weighted = [this, &g](double y) { return g(y) * density(y); };
    switch (family_) {
    case Family::normal: {
        // 12-sigma window; the Gaussian weight buries anything polynomial.
        double lo = -12.0 * p0_, hi = 12.0 * p0_;
        return integrate_split(weighted, lo, hi, std::move(splits));
    }
    case Family::exponential_centered: {
        double lo = lo_;
        double hi = quantile(1.0 - 1e-16);
        return integrate_split(weighted, lo, hi, std::move(splits));
    }
    case Family::uniform_centered:
        return integrate_split(weighted, lo_, hi_, std::move(splits));
    case Family::pareto_centered: {
        // Head by quadrature, polynomial tail by geometric continuation.
        if (growth_degree >= p0_)
            return kInf;
        double head_hi = quantile(0.999);
        double head = integrate_split(weighted, lo_, head_hi, std::move(splits));
        double tail = integrate_tail(weighted, head_hi);
        return head + tail;
    }
    default:
        return 0.0;
    }
}

std::vector<double> sample(const DistributionSpec& dist, std::size_t n,
                           SeedStream stream) {
    CounterRng rng(stream);
    std::vector<double> out(n);
    for (auto& v : out)
        v = dist.draw(rng);
    return out;
}

} // namespace selfnorm
