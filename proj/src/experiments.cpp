#include "selfnorm/experiments.hpp"

#include "selfnorm/common.hpp"
#include "selfnorm/normal.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace selfnorm {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(trim(item));
    return out;
}

double parse_num(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("line " + std::to_string(line) + ": not a number: " + v);
    }
}

uint64_t parse_u64(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        uint64_t d = std::stoull(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("line " + std::to_string(line) + ": not an integer: " + v);
    }
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1")
        return true;
    if (v == "false" || v == "0")
        return false;
    throw config_error("line " + std::to_string(line) + ": not a boolean: " + v);
}

const char* statistic_name(StatisticKind s) {
    switch (s) {
    case StatisticKind::self_normalized_sum: return "self-normalized-sum";
    case StatisticKind::studentized_u: return "studentized-u";
    case StatisticKind::generic: return "generic";
    }
    return "?";
}

const char* estimator_name(EstimatorKind e) {
    switch (e) {
    case EstimatorKind::plain: return "plain";
    case EstimatorKind::tilted: return "tilted";
    case EstimatorKind::both: return "both";
    }
    return "?";
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#')
            continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line) +
                               ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty() || val.empty())
            throw config_error("line " + std::to_string(line) +
                               ": empty key or value");

        if (key == "statistic") {
            if (val == "self-normalized-sum")
                cfg.statistic = StatisticKind::self_normalized_sum;
            else if (val == "studentized-u")
                cfg.statistic = StatisticKind::studentized_u;
            else if (val == "generic")
                cfg.statistic = StatisticKind::generic;
            else
                throw config_error("line " + std::to_string(line) +
                                   ": unknown statistic: " + val);
        } else if (key == "dist") {
            cfg.dist = val;
        } else if (key.rfind("dist.", 0) == 0) {
            cfg.dist_params.push_back({key.substr(5), parse_num(val, line)});
        } else if (key == "kernel") {
            cfg.kernel = val;
        } else if (key == "n_list") {
            cfg.n_list.clear();
            for (const auto& item : split(val, ','))
                cfg.n_list.push_back(static_cast<int>(parse_u64(item, line)));
        } else if (key == "x_grid") {
            cfg.x_grid.clear();
            for (const auto& item : split(val, ','))
                cfg.x_grid.push_back(parse_num(item, line));
        } else if (key == "reps") {
            cfg.reps = parse_u64(val, line);
        } else if (key == "seed") {
            cfg.seed = parse_u64(val, line);
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(parse_u64(val, line));
        } else if (key == "estimator") {
            if (val == "plain")
                cfg.estimator = EstimatorKind::plain;
            else if (val == "tilted")
                cfg.estimator = EstimatorKind::tilted;
            else if (val == "both")
                cfg.estimator = EstimatorKind::both;
            else
                throw config_error("line " + std::to_string(line) +
                                   ": unknown estimator: " + val);
        } else if (key == "x_tilt") {
            cfg.x_tilt = parse_num(val, line);
        } else if (key == "envelope_p") {
            cfg.envelope_p = parse_num(val, line);
        } else if (key == "envelope_c1") {
            cfg.envelope_c1 = parse_num(val, line);
        } else if (key == "fit_constant") {
            cfg.fit_constant = parse_bool(val, line);
        } else if (key == "gen_c1") {
            cfg.gen_c1 = parse_num(val, line);
        } else if (key == "gen_c2") {
            cfg.gen_c2 = parse_num(val, line);
        } else if (key == "out") {
            cfg.out_dir = val;
        } else if (key == "format") {
            if (val == "csv")
                cfg.format = OutputFormat::csv;
            else if (val == "json")
                cfg.format = OutputFormat::json;
            else
                throw config_error("line " + std::to_string(line) +
                                   ": unknown format: " + val);
        } else if (key == "kc_trials") {
            cfg.kc_trials = parse_u64(val, line);
        } else if (key == "conc_reps") {
            cfg.conc_reps = parse_u64(val, line);
        } else if (key == "rnx_estimates") {
            cfg.rnx_estimates = parse_bool(val, line);
        } else if (key == "rnx_reps") {
            cfg.rnx_reps = parse_u64(val, line);
        } else {
            throw config_error("line " + std::to_string(line) + ": unknown key: " +
                               key);
        }
    }

    if (cfg.reps < 1000)
        throw config_error("reps must be >= 1000");
    if (!std::is_sorted(cfg.x_grid.begin(), cfg.x_grid.end()))
        throw config_error("x_grid must be sorted ascending");
    for (double x : cfg.x_grid)
        if (x < 0.0)
            throw config_error("x_grid entries must be >= 0");
    if (cfg.n_list.empty() || cfg.x_grid.empty())
        throw config_error("n_list and x_grid must be non-empty");
    if (cfg.workers < 1)
        throw config_error("workers must be >= 1");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_env_seed(ExperimentConfig& config) {
    if (const char* env = std::getenv("SELFNORM_SEED")) {
        try {
            config.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw config_error("SELFNORM_SEED is not an integer");
        }
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::pair<double, double> wilson_interval(uint64_t hits, uint64_t total, double z) {
    double n = static_cast<double>(total);
    double p = static_cast<double>(hits) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

StatisticFn make_statistic(const ExperimentConfig& config,
                           const DistributionSpec& dist, int n) {
    switch (config.statistic) {
    case StatisticKind::self_normalized_sum:
        return self_normalized_statistic();
    case StatisticKind::studentized_u: {
        KernelSpec k = builtin_kernel(config.kernel);
        if (n <= 2 * k.degree())
            throw config_error("studentized-u requires n > 2m");
        double theta = k.theta(dist);
        return make_studentized_u_statistic(std::move(k), theta);
    }
    case StatisticKind::generic:
        return make_generic_statistic(dist, n, config.gen_c1, config.gen_c2);
    }
    throw config_error("bad statistic");
}

std::vector<uint64_t> block_sizes(uint64_t reps) {
    const uint64_t kBlock = 4096;
    std::vector<uint64_t> sizes;
    uint64_t full = reps / kBlock;
    uint64_t rem = reps % kBlock;
    for (uint64_t b = 0; b < full; ++b)
        sizes.push_back(kBlock);
    if (rem >= 100 || sizes.empty())
        sizes.push_back(rem);
    else if (rem > 0)
        sizes.back() += rem;
    if (sizes.back() == 0)
        sizes.pop_back();
    return sizes;
}

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    int actual = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    for (int w = 0; w < actual; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        });
    for (auto& t : pool)
        t.join();
}

} // namespace

TailEstimate pooled_tail(const ExperimentConfig& config, const DistributionSpec& dist,
                         int n, double x, EstimatorKind estimator) {
    if (estimator == EstimatorKind::both)
        throw config_error("pooled_tail expects a single estimator");
    auto sizes = block_sizes(config.reps);
    std::vector<TailEstimate> results(sizes.size());
    const uint64_t xbits = std::bit_cast<uint64_t>(x);
    const uint64_t tag = estimator == EstimatorKind::plain ? 1 : 2;

    StatisticFn stat = make_statistic(config, dist, n);
    std::optional<TiltedDistribution> tilted;
    double x_tilt = config.x_tilt.value_or(x);
    if (estimator == EstimatorKind::tilted)
        tilted.emplace(build_tilted(dist, n, x_tilt));

    parallel_for(sizes.size(), config.workers, [&](std::size_t b) {
        SeedStream stream{config.seed,
                          derive_stream(tag, static_cast<uint64_t>(n), xbits,
                                        static_cast<uint64_t>(b))};
        if (estimator == EstimatorKind::plain) {
            results[b] = estimate_tail_plain(dist, stat, n, x, sizes[b], stream);
        } else {
            results[b] = estimate_tail_tilted(
                *tilted, [&](std::span<const double> s) { return stat(s) >= x; },
                sizes[b], stream, /*min_ess=*/0.0);
        }
    });

    // Merge in block order: identical bytes for any worker count.
    TailEstimate out;
    out.method = estimator == EstimatorKind::plain ? "plain" : "tilted";
    KahanSum sv, sv2, sw, sw2;
    for (const auto& r : results) {
        out.reps += r.reps;
        out.hits += r.hits;
        sv.add(r.sum_v);
        sv2.add(r.sum_v2);
        sw.add(r.sum_w);
        sw2.add(r.sum_w2);
    }
    out.sum_v = sv.value();
    out.sum_v2 = sv2.value();
    out.sum_w = sw.value();
    out.sum_w2 = sw2.value();
    double nrep = static_cast<double>(out.reps);
    if (estimator == EstimatorKind::plain) {
        out.estimate = static_cast<double>(out.hits) / nrep;
        out.se = std::sqrt(out.estimate * (1.0 - out.estimate) / nrep);
        out.ess = static_cast<double>(out.hits);
    } else {
        out.estimate = out.sum_v / nrep;
        double var = std::max(0.0, out.sum_v2 / nrep - out.estimate * out.estimate);
        out.se = std::sqrt(var / nrep);
        out.ess = out.sum_v2 > 0.0 ? out.sum_v * out.sum_v / out.sum_v2 : 0.0;
        if (out.ess < 10.0)
            throw degenerate_weights("pooled tilted tail: effective sample size < 10");
    }
    return out;
}

namespace {

struct EnvelopeCalc {
    bool ustat = false;
    UstatEnvelopeParams params{};
    bool jsw_ok = true;

    double value(const DistributionSpec& dist, int n, double x) const {
        if (ustat)
            return envelope_ustat(n, x, params, 1.0);
        if (!jsw_ok)
            return kInf;
        return envelope_jsw(dist, n, x, 1.0);
    }
    bool in_range(const DistributionSpec& dist, int n, double x, double c1) const {
        if (ustat)
            return ustat_x_in_range(n, x, params, c1);
        if (!jsw_ok)
            return false;
        return x <= c1 * jsw_x_max(dist, n);
    }
};

EnvelopeCalc make_envelope(const ExperimentConfig& config,
                           const DistributionSpec& dist) {
    EnvelopeCalc env;
    if (config.statistic == StatisticKind::studentized_u) {
        env.ustat = true;
        env.params = ustat_envelope_params(builtin_kernel(config.kernel), dist,
                                           config.envelope_p);
    } else {
        env.jsw_ok = std::isfinite(dist.abs_third_moment());
    }
    return env;
}

} // namespace

RatioCurve run_ratio_curve(const ExperimentConfig& config) {
    auto t0 = std::chrono::steady_clock::now();
    auto dist = make_distribution(config.dist, config.dist_params);
    auto env = make_envelope(config, dist);

    RatioCurve curve;
    curve.seed = config.seed;
    for (int n : config.n_list) {
        double c_hat = 0.0;
        for (double x : config.x_grid) {
            TailEstimate est;
            if (config.estimator == EstimatorKind::both) {
                TailEstimate p = pooled_tail(config, dist, n, x, EstimatorKind::plain);
                TailEstimate t = pooled_tail(config, dist, n, x, EstimatorKind::tilted);
                est = (t.se > 0.0 && t.se < p.se) ? t : p;
            } else {
                est = pooled_tail(config, dist, n, x, config.estimator);
            }

            RatioRow row;
            row.n = n;
            row.x = x;
            row.tail_hat = est.estimate;
            row.tail_se = est.se;
            row.gauss_tail = normal_tail(x);
            row.ratio = row.tail_hat / row.gauss_tail;
            if (est.method == "plain") {
                auto [lo, hi] = wilson_interval(est.hits, est.reps);
                row.ratio_lo = lo / row.gauss_tail;
                row.ratio_hi = hi / row.gauss_tail;
            } else {
                double z = 1.959963984540054;
                row.ratio_lo = std::max(0.0, est.estimate - z * est.se) / row.gauss_tail;
                row.ratio_hi = (est.estimate + z * est.se) / row.gauss_tail;
            }
            row.envelope = env.value(dist, n, x);
            row.l_nx = L_nx(dist, n, x);
            row.in_range = env.in_range(dist, n, x, config.envelope_c1);
            curve.rows.push_back(row);

            if (config.fit_constant && row.in_range && row.envelope > 0.0 &&
                std::isfinite(row.envelope))
                c_hat = std::max(c_hat, std::abs(row.ratio - 1.0) / row.envelope);
        }
        curve.c_hat_per_n[n] = c_hat;
        curve.c_hat_global = std::max(curve.c_hat_global, c_hat);
    }
    curve.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return curve;
}

std::string ratio_curve_csv(const RatioCurve& curve) {
    std::string out =
        "n,x,tail_hat,tail_se,gauss_tail,ratio,ratio_lo,ratio_hi,envelope,L_nx,in_range\n";
    for (const auto& r : curve.rows) {
        out += std::to_string(r.n);
        out += ',';
        out += format_double(r.x);
        out += ',';
        out += format_double(r.tail_hat);
        out += ',';
        out += format_double(r.tail_se);
        out += ',';
        out += format_double(r.gauss_tail);
        out += ',';
        out += format_double(r.ratio);
        out += ',';
        out += format_double(r.ratio_lo);
        out += ',';
        out += format_double(r.ratio_hi);
        out += ',';
        out += format_double(r.envelope);
        out += ',';
        out += format_double(r.l_nx);
        out += ',';
        out += r.in_range ? '1' : '0';
        out += '\n';
    }
    return out;
}

namespace {

nlohmann::json config_echo(const ExperimentConfig& config) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& p : config.dist_params)
        params[p.name] = p.value;
    nlohmann::json j{
        {"statistic", statistic_name(config.statistic)},
        {"dist", config.dist},
        {"dist_params", params},
        {"kernel", config.kernel},
        {"n_list", config.n_list},
        {"x_grid", config.x_grid},
        {"reps", config.reps},
        {"seed", config.seed},
        {"workers", config.workers},
        {"estimator", estimator_name(config.estimator)},
        {"envelope_p", config.envelope_p},
        {"envelope_c1", config.envelope_c1},
        {"fit_constant", config.fit_constant},
        {"gen_c1", config.gen_c1},
        {"gen_c2", config.gen_c2},
        {"out", config.out_dir},
        {"format", config.format == OutputFormat::csv ? "csv" : "json"},
        {"kc_trials", config.kc_trials},
        {"conc_reps", config.conc_reps},
        {"rnx_estimates", config.rnx_estimates},
        {"rnx_reps", config.rnx_reps},
    };
    if (config.x_tilt)
        j["x_tilt"] = *config.x_tilt;
    return j;
}

} // namespace

nlohmann::json ratio_curve_json(const ExperimentConfig& config,
                                const RatioCurve& curve) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : curve.rows) {
        rows.push_back({{"n", r.n},
                        {"x", r.x},
                        {"tail_hat", r.tail_hat},
                        {"tail_se", r.tail_se},
                        {"gauss_tail", r.gauss_tail},
                        {"ratio", r.ratio},
                        {"ratio_lo", r.ratio_lo},
                        {"ratio_hi", r.ratio_hi},
                        {"envelope", r.envelope},
                        {"L_nx", r.l_nx},
                        {"in_range", r.in_range}});
    }
    nlohmann::json fitted = nlohmann::json::object();
    for (const auto& [n, c] : curve.c_hat_per_n)
        fitted["C_hat_n" + std::to_string(n)] = c;
    fitted["C_hat_global"] = curve.c_hat_global;
    return nlohmann::json{{"config_echo", config_echo(config)},
                          {"results", rows},
                          {"fitted_constants", fitted},
                          {"verdicts", nlohmann::json::object()},
                          {"runtime_seconds", curve.runtime_seconds},
                          {"seed", curve.seed}};
}

BoundReportResult run_bound_report(const ExperimentConfig& config) {
    auto t0 = std::chrono::steady_clock::now();
    auto dist = make_distribution(config.dist, config.dist_params);
    auto env = make_envelope(config, dist);
    RatioCurve curve = run_ratio_curve(config);

    BoundReportResult out;
    out.seed = config.seed;
    out.c_hat_per_n = curve.c_hat_per_n;
    out.c_hat_global = curve.c_hat_global;
    auto kernel = builtin_kernel(config.kernel);
    std::optional<UstatEnvelopeParams> uparams;
    try {
        uparams = ustat_envelope_params(kernel, dist, config.envelope_p);
    } catch (const error&) {
        // divergent kernel moments under this law: leave the column infinite
    }
    bool b3_finite = std::isfinite(dist.abs_third_moment());
    std::size_t idx = 0;
    uint64_t rnx_stream = 0;
    for (int n : config.n_list) {
        for (double x : config.x_grid) {
            BoundRow row;
            row.n = n;
            row.x = x;
            row.delta_x = delta_ix(dist, n, x);
            row.l_nx = static_cast<double>(n) * row.delta_x;
            row.i_nx = I_nx(dist, n, x);
            row.c1_ok = row.delta_x <= 1.0;
            row.rc_ok = row.l_nx <= config.envelope_c1 * x * x;
            row.envelope_jsw = b3_finite ? envelope_jsw(dist, n, x, 1.0) : kInf;
            row.envelope_ustat =
                uparams ? envelope_ustat(n, x, *uparams, 1.0) : kInf;
            row.in_range = env.in_range(dist, n, x, config.envelope_c1);
            row.ratio = curve.rows[idx].ratio;
            if (config.rnx_estimates && uparams) {
                RemainderOptions ropts;
                ropts.reps = config.rnx_reps;
                SeedStream rs{config.seed, derive_stream(60, ++rnx_stream)};
                if (x > 0.0)
                    row.rnx = estimate_Rnx(dist, kernel, n, x, rs, ropts);
                row.breve_r = estimate_breve_Rnx(dist, kernel, n, x, rs, ropts);
            }
            out.rows.push_back(row);
            ++idx;
        }
    }
    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

nlohmann::json bound_report_json(const ExperimentConfig& config,
                                 const BoundReportResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    bool all_c1 = true, all_rc = true;
    for (const auto& r : result.rows) {
        all_c1 = all_c1 && r.c1_ok;
        all_rc = all_rc && r.rc_ok;
        nlohmann::json jr{{"n", r.n},
                          {"x", r.x},
                          {"delta_x", r.delta_x},
                          {"L_nx", r.l_nx},
                          {"I_nx", r.i_nx},
                          {"c1_condition", r.c1_ok},
                          {"rc_condition", r.rc_ok},
                          {"envelope_jsw", r.envelope_jsw},
                          {"envelope_ustat", r.envelope_ustat},
                          {"in_range", r.in_range},
                          {"ratio", r.ratio}};
        if (r.rnx)
            jr["R_nx"] = {{"estimate", r.rnx->value}, {"se", r.rnx->se}};
        if (r.breve_r)
            jr["breve_R_nx"] = {{"estimate", r.breve_r->value},
                                {"se", r.breve_r->se}};
        rows.push_back(std::move(jr));
    }
    nlohmann::json fitted = nlohmann::json::object();
    for (const auto& [n, c] : result.c_hat_per_n)
        fitted["C_hat_n" + std::to_string(n)] = c;
    fitted["C_hat_global"] = result.c_hat_global;
    return nlohmann::json{{"config_echo", config_echo(config)},
                          {"results", rows},
                          {"fitted_constants", fitted},
                          {"verdicts", {{"all_c1", all_c1}, {"all_rc", all_rc}}},
                          {"runtime_seconds", result.runtime_seconds},
                          {"seed", result.seed}};
}

ConcentrationSuiteResult run_concentration_suite(const ExperimentConfig& config) {
    auto t0 = std::chrono::steady_clock::now();
    struct Law {
        const char* name;
        Params params;
    };
    const std::vector<Law> laws = {
        {"normal", {}},
        {"exponential-centered", {}},
        {"rademacher", {}},
        {"uniform-centered", {}},
        {"two-point", {{"p", 0.8}}},
    };
    const std::vector<int> ns = {20, 50};

    ConcentrationSuiteResult out;
    out.seed = config.seed;
    out.all_ok = true;
    uint64_t idx = 0;
    for (std::size_t li = 0; li < laws.size(); ++li) {
        for (int n : ns) {
            for (int choice = 0; choice < 2; ++choice) {
                ConcentrationConfig cc(
                    make_distribution(laws[li].name, laws[li].params));
                cc.n = n;
                cc.reps = config.conc_reps;
                cc.stream = {config.seed, derive_stream(90, idx)};
                std::string choice_name;
                if (choice == 0) {
                    cc.choice = DeltaChoice::constants;
                    // one deliberately reversed (empty) band in the grid
                    if (li == 2 && n == 20) {
                        cc.a = 1.0;
                        cc.b = -1.0;
                        choice_name = "constants(1,-1)";
                    } else {
                        cc.a = -1.0;
                        cc.b = 1.0;
                        choice_name = "constants(-1,1)";
                    }
                } else {
                    cc.choice = DeltaChoice::v_squared_band;
                    cc.c = 1.0;
                    choice_name = "v-squared-band(1)";
                }
                auto rep = concentration_check(cc);
                out.all_ok = out.all_ok && rep.verdict;
                out.rows.push_back({{"dist", laws[li].name},
                                    {"n", n},
                                    {"delta_choice", choice_name},
                                    {"lhs", rep.lhs},
                                    {"lhs_se", rep.lhs_se},
                                    {"rhs", rep.rhs},
                                    {"rhs_se", rep.rhs_se},
                                    {"margin", rep.margin},
                                    {"verdict", rep.verdict},
                                    {"beta2", rep.beta2},
                                    {"beta3", rep.beta3}});
                ++idx;
            }
        }
    }
    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

nlohmann::json concentration_suite_json(const ExperimentConfig& config,
                                        const ConcentrationSuiteResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : result.rows)
        rows.push_back(r);
    return nlohmann::json{{"config_echo", config_echo(config)},
                          {"results", rows},
                          {"fitted_constants", nlohmann::json::object()},
                          {"verdicts", {{"all_ok", result.all_ok}}},
                          {"runtime_seconds", result.runtime_seconds},
                          {"seed", result.seed}};
}

} // namespace selfnorm
