#pragma once

#include "selfnorm/quadrature.hpp"
#include "selfnorm/rng.hpp"

#include <string>
#include <vector>

namespace selfnorm {

enum class Family {
    normal,
    exponential_centered,
    rademacher,
    uniform_centered,
    pareto_centered,
    two_point,
};

struct Atom {
    double x;
    double p;
};

struct Param {
    std::string name;
    double value;
};
using Params = std::vector<Param>;

/// A centered data-generating law: density/CDF/quantile, reproducible
/// sampling, and the truncated-moment primitives the bound calculations run
/// on. Immutable after construction; safe for concurrent reads.
class DistributionSpec {
public:
    Family family() const { return family_; }
    const std::string& name() const { return name_; }

    double mean() const { return 0.0; } // centered at construction
    double variance() const { return variance_; }
    double sd() const { return sd_; }

    bool is_discrete() const;
    const std::vector<Atom>& atoms() const; // throws discrete_law if continuous

    double density(double y) const; // throws discrete_law for discrete families
    double cdf(double y) const;
    double quantile(double u) const; // u in (0,1)
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }

    // Moment primitives (closed forms where they exist, with analytic
    // power-law tails for pareto).
    double partial_mean(double y) const;       // E[X 1{X<=y}]
    double second_moment_tail(double t) const; // E[X^2 1{|X|>t}], t >= 0
    double abs_third_below(double t) const;    // E[|X|^3 1{|X|<=t}], t >= 0
    double abs_moment(double p) const;         // E|X|^p, +inf when divergent
    double abs_third_moment() const { return abs_moment(3.0); }
    bool abs_third_closed_form() const;
    double sigma_p(double p) const; // (E|X|^p)^{1/p}
    double fourth_moment() const;   // +inf when divergent

    /// E[g(X)]: quadrature for continuous laws (interior `splits` mark
    /// non-smooth points of g), exact summation for discrete ones.
    /// `growth_degree` bounds |g| ~ |y|^deg for the heavy-tail continuation;
    /// divergent integrals come back +inf.
    double expect(const Integrand& g, std::vector<double> splits = {},
                  double growth_degree = 3.0) const;

    double draw(CounterRng& rng) const { return quantile(rng.next_unit()); }

    friend DistributionSpec make_distribution(Family family, const Params& params);

private:
    DistributionSpec() = default;

    Family family_{};
    std::string name_;
    double variance_ = 0.0;
    double sd_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
    // Family parameters (meaning depends on family).
    double p0_ = 0.0;
    double p1_ = 0.0;
    std::vector<Atom> atoms_;
};

DistributionSpec make_distribution(Family family, const Params& params = {});
DistributionSpec make_distribution(const std::string& family_name,
                                   const Params& params = {});
Family family_from_name(const std::string& name);
std::string family_name(Family f);

/// n i.i.d. draws, deterministic in (dist, n, stream).
std::vector<double> sample(const DistributionSpec& dist, std::size_t n,
                           SeedStream stream);

} // namespace selfnorm
