#pragma once

#include "selfnorm/distributions.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace selfnorm {

enum class BuiltinKernel { none, t, variance, gini, wilcoxon };

struct KernelConstants {
    double c0;
    double tau;
};

/// Symmetric U-statistic kernel of degree m with its projection h1, mean
/// theta, variances, and quadratic-domination constants (c0, tau). tau binds
/// lazily against a distribution (theta and sigma are law-dependent).
/// Immutable; safe for concurrent reads.
class KernelSpec {
public:
    using Eval = std::function<double(std::span<const double>)>;

    const std::string& name() const { return name_; }
    int degree() const { return degree_; }
    BuiltinKernel builtin_id() const { return builtin_; }

    double eval(std::span<const double> args) const;

    double theta(const DistributionSpec& dist) const;
    /// h1(y) = E[h(y, X_2, ..., X_m)]; closed form for every built-in.
    double h1(const DistributionSpec& dist, double y) const;
    bool has_analytic_h1() const;
    double sigma2(const DistributionSpec& dist) const;   // Var h1(X)
    double sigma_h2(const DistributionSpec& dist) const; // Var h
    /// (E|h1(X) - theta|^p)^{1/p}, p in (2,3].
    double sigma_p(const DistributionSpec& dist, double p) const;

    bool has_kc() const { return c0_.has_value(); }
    KernelConstants kc(const DistributionSpec& dist) const;

    friend KernelSpec builtin_kernel(const std::string& name);
    friend KernelSpec make_kernel(std::string name, int degree, Eval eval,
                                  std::optional<double> c0,
                                  std::optional<double> tau);

private:
    KernelSpec() = default;

    std::string name_;
    int degree_ = 2;
    Eval eval_;
    BuiltinKernel builtin_ = BuiltinKernel::none;
    std::optional<double> c0_;
    std::optional<double> tau_; // fixed tau for user kernels; built-ins derive it
};

/// name in {t, variance, gini, wilcoxon}.
KernelSpec builtin_kernel(const std::string& name);

/// User-registered kernel; (c0, tau) optional.
KernelSpec make_kernel(std::string name, int degree, KernelSpec::Eval eval,
                       std::optional<double> c0 = std::nullopt,
                       std::optional<double> tau = std::nullopt);

struct ProjectionEstimate {
    double value;
    double se; // 0 for analytic evaluation
};

/// Conditional Monte Carlo h1 when no analytic form is registered.
ProjectionEstimate h1_projection(const KernelSpec& k, const DistributionSpec& dist,
                                 double y, int inner_reps, SeedStream stream);

struct ViolationReport {
    uint64_t trials = 0;
    uint64_t violations = 0;
    double worst_margin = 0.0; // most negative RHS - LHS over all tuples
    std::vector<double> witness;
};

/// Evaluates {h(x)-theta}^2 <= c0 [tau sigma^2 + sum {h1(x_i)-theta}^2] on
/// `trials` i.i.d. tuples plus a deterministic stress grid (+-{1,2,4,8} sigma
/// in every coordinate; atom values for discrete laws).
ViolationReport check_condition_kc(const KernelSpec& k, const DistributionSpec& dist,
                                   double c0, double tau, uint64_t trials,
                                   SeedStream stream);

/// Smallest c0 with zero violations over the sampled tuples at fixed tau
/// (empirical, no optimality claim).
double empirical_min_c0(const KernelSpec& k, const DistributionSpec& dist, double tau,
                        uint64_t trials, SeedStream stream);

} // namespace selfnorm
