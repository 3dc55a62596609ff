#pragma once

#include "selfnorm/bounds.hpp"
#include "selfnorm/common.hpp"
#include "selfnorm/concentration.hpp"
#include "selfnorm/distributions.hpp"
#include "selfnorm/kernels.hpp"
#include "selfnorm/tilting.hpp"

#include "json.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace selfnorm {

enum class StatisticKind { self_normalized_sum, studentized_u, generic };
enum class EstimatorKind { plain, tilted, both };
enum class OutputFormat { csv, json };

/// Flat key=value experiment configuration; unknown keys are rejected with
/// line diagnostics. See docs in README for the schema.
struct ExperimentConfig {
    StatisticKind statistic = StatisticKind::self_normalized_sum;
    std::string dist = "normal";
    Params dist_params;
    std::string kernel = "t";
    std::vector<int> n_list{50};
    std::vector<double> x_grid{0.5, 1.0, 1.5};
    uint64_t reps = 100'000;
    uint64_t seed = 0;
    int workers = 1;
    EstimatorKind estimator = EstimatorKind::plain;
    std::optional<double> x_tilt; // default: tilt at the threshold x
    double envelope_p = 3.0;
    double envelope_c1 = 1.0;
    bool fit_constant = true;
    double gen_c1 = 0.0, gen_c2 = 0.0;
    std::string out_dir = ".";
    OutputFormat format = OutputFormat::csv;
    uint64_t kc_trials = 1'000'000;
    uint64_t conc_reps = 100'000;
    bool rnx_estimates = false; // include R_{n,x} / breve R in bound reports
    uint64_t rnx_reps = 2'000;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
/// Applies SELFNORM_SEED when the environment variable is set.
void apply_env_seed(ExperimentConfig& config);

struct RatioRow {
    int n = 0;
    double x = 0.0;
    double tail_hat = 0.0;
    double tail_se = 0.0;
    double gauss_tail = 0.0;
    double ratio = 0.0;
    double ratio_lo = 0.0;
    double ratio_hi = 0.0;
    double envelope = 0.0;
    double l_nx = 0.0;
    bool in_range = false;
};

struct RatioCurve {
    std::vector<RatioRow> rows;
    std::map<int, double> c_hat_per_n; // max over in-range x of |ratio-1|/envelope(C=1)
    double c_hat_global = 0.0;
    double runtime_seconds = 0.0;
    uint64_t seed = 0;
};

RatioCurve run_ratio_curve(const ExperimentConfig& config);
std::string ratio_curve_csv(const RatioCurve& curve);
nlohmann::json ratio_curve_json(const ExperimentConfig& config,
                                const RatioCurve& curve);

struct BoundRow {
    int n = 0;
    double x = 0.0;
    double delta_x = 0.0;
    double l_nx = 0.0;
    double i_nx = 0.0;
    bool c1_ok = false;
    bool rc_ok = false;
    double envelope_jsw = 0.0;   // +inf when the third moment diverges
    double envelope_ustat = 0.0; // config kernel at envelope_p
    bool in_range = false;
    double ratio = 0.0;
    std::optional<EstimateSE> rnx;     // present when rnx_estimates is set
    std::optional<EstimateSE> breve_r; // (x >= 1 only for rnx)
};

struct BoundReportResult {
    std::vector<BoundRow> rows;
    std::map<int, double> c_hat_per_n;
    double c_hat_global = 0.0;
    double runtime_seconds = 0.0;
    uint64_t seed = 0;
};

BoundReportResult run_bound_report(const ExperimentConfig& config);
nlohmann::json bound_report_json(const ExperimentConfig& config,
                                 const BoundReportResult& result);

struct ConcentrationSuiteResult {
    std::vector<nlohmann::json> rows;
    bool all_ok = false;
    double runtime_seconds = 0.0;
    uint64_t seed = 0;
};

/// The fixed 20-configuration grid (5 laws x n in {20,50} x 2 band choices,
/// one row carrying a reversed/empty band).
ConcentrationSuiteResult run_concentration_suite(const ExperimentConfig& config);
nlohmann::json concentration_suite_json(const ExperimentConfig& config,
                                        const ConcentrationSuiteResult& result);

/// Pooled tail estimate for one (n, x): fixed 4096-rep blocks with derived
/// stream ids, merged in block order, so results are identical for any
/// worker count.
TailEstimate pooled_tail(const ExperimentConfig& config, const DistributionSpec& dist,
                         int n, double x, EstimatorKind estimator);

/// Wilson score interval at z (95% default).
std::pair<double, double> wilson_interval(uint64_t hits, uint64_t total,
                                          double z = 1.959963984540054);

std::string format_double(double v); // shortest round-trip-safe decimal (%.17g)

} // namespace selfnorm
