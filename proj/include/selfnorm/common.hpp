#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace selfnorm {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error taxonomy. One type per failure mode callers are expected to branch
// on; anything else surfaces as std::logic_error.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_parameter : error { using error::error; };
struct discrete_law : error { using error::error; };
struct unknown_kernel : error { using error::error; };
struct arity_mismatch : error { using error::error; };
struct degenerate_kernel : error { using error::error; };
struct zero_variance : error { using error::error; };
struct too_large : error { using error::error; };
struct out_of_range : error { using error::error; };
struct degenerate_weights : error { using error::error; };
struct infinite_moment : error { using error::error; };
struct config_error : error { using error::error; };

// Neumaier compensated accumulator. Subset enumerations add up to ~1e7 terms
// and the decomposition identities are asserted at relative 1e-9.
class KahanSum {
public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline bool approx_rel(double a, double b, double rel_tol) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) <= rel_tol * scale;
}

} // namespace selfnorm
