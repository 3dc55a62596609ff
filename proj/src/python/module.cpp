#include "selfnorm/bounds.hpp"
#include "selfnorm/concentration.hpp"
#include "selfnorm/normal.hpp"
#include "selfnorm/distributions.hpp"
#include "selfnorm/experiments.hpp"
#include "selfnorm/kernels.hpp"
#include "selfnorm/tilting.hpp"
#include "selfnorm/ustat.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace selfnorm;

namespace {

Params params_from_dict(const py::dict& d) {
    Params out;
    for (auto item : d)
        out.push_back({py::cast<std::string>(item.first), py::cast<double>(item.second)});
    return out;
}

py::dict tail_dict(const TailEstimate& est) {
    py::dict d;
    d["estimate"] = est.estimate;
    d["se"] = est.se;
    d["reps"] = est.reps;
    d["method"] = est.method;
    d["ess"] = est.ess;
    return d;
}

} // namespace

PYBIND11_MODULE(_selfnorm, m) {
    m.doc() = "self-normalized tail statistics: distributions, U-statistic "
              "decompositions, bound quantities, exponential tilting, and "
              "concentration checks";

    py::register_exception<error>(m, "SelfnormError");

    py::class_<DistributionSpec>(m, "Distribution")
        .def_property_readonly("name", &DistributionSpec::name)
        .def_property_readonly("mean", &DistributionSpec::mean)
        .def_property_readonly("variance", &DistributionSpec::variance)
        .def_property_readonly("is_discrete", &DistributionSpec::is_discrete)
        .def("density", &DistributionSpec::density, py::arg("y"))
        .def("cdf", &DistributionSpec::cdf, py::arg("y"))
        .def("quantile", &DistributionSpec::quantile, py::arg("u"))
        .def("abs_third_moment", &DistributionSpec::abs_third_moment)
        .def("sigma_p", &DistributionSpec::sigma_p, py::arg("p"))
        .def(
            "sample",
            [](const DistributionSpec& d, std::size_t n, uint64_t seed,
               uint64_t stream) { return sample(d, n, {seed, stream}); },
            py::arg("n"), py::arg("seed"), py::arg("stream") = 0)
        .def("__repr__",
             [](const DistributionSpec& d) { return "<Distribution " + d.name() + ">"; });

    m.def(
        "make_distribution",
        [](const std::string& family, const py::dict& params) {
            return make_distribution(family, params_from_dict(params));
        },
        py::arg("family"), py::arg("params") = py::dict());

    py::class_<KernelSpec>(m, "Kernel")
        .def_property_readonly("name", &KernelSpec::name)
        .def_property_readonly("degree", &KernelSpec::degree)
        .def("eval",
             [](const KernelSpec& k, const std::vector<double>& args) {
                 return k.eval(args);
             })
        .def("theta", &KernelSpec::theta)
        .def("h1", &KernelSpec::h1, py::arg("dist"), py::arg("y"))
        .def("sigma2", &KernelSpec::sigma2)
        .def("sigma_h2", &KernelSpec::sigma_h2)
        .def("sigma_p", &KernelSpec::sigma_p, py::arg("dist"), py::arg("p"))
        .def("kc",
             [](const KernelSpec& k, const DistributionSpec& d) {
                 auto kc = k.kc(d);
                 return py::make_tuple(kc.c0, kc.tau);
             })
        .def("__repr__",
             [](const KernelSpec& k) { return "<Kernel " + k.name() + ">"; });

    m.def("builtin_kernel", &builtin_kernel, py::arg("name"));

    m.def(
        "check_condition_kc",
        [](const KernelSpec& k, const DistributionSpec& d, double c0, double tau,
           uint64_t trials, uint64_t seed, uint64_t stream) {
            auto rep = check_condition_kc(k, d, c0, tau, trials, {seed, stream});
            py::dict out;
            out["trials"] = rep.trials;
            out["violations"] = rep.violations;
            out["worst_margin"] = rep.worst_margin;
            out["witness"] = rep.witness;
            return out;
        },
        py::arg("kernel"), py::arg("dist"), py::arg("c0"), py::arg("tau"),
        py::arg("trials"), py::arg("seed"), py::arg("stream") = 0);

    m.def(
        "u_statistic",
        [](const std::vector<double>& sample, const KernelSpec& k, bool relax_size) {
            UStatOptions opts;
            opts.relax_size = relax_size;
            return u_statistic(sample, k, opts);
        },
        py::arg("sample"), py::arg("kernel"), py::arg("relax_size") = false);
    m.def(
        "jackknife",
        [](const std::vector<double>& sample, const KernelSpec& k) {
            auto jk = jackknife(sample, k);
            return py::make_tuple(jk.q, jk.s1_2);
        },
        py::arg("sample"), py::arg("kernel"));
    m.def(
        "studentize",
        [](const std::vector<double>& sample, const KernelSpec& k, double theta) {
            auto st = studentize(sample, k, theta);
            return py::make_tuple(st.t_n, st.t_star);
        },
        py::arg("sample"), py::arg("kernel"), py::arg("theta"));
    m.def("t_star_transform", &t_star_transform, py::arg("x"), py::arg("n"),
          py::arg("m"));
    m.def("t_star_inverse", &t_star_inverse, py::arg("y"), py::arg("n"), py::arg("m"));

    m.def(
        "hoeffding_decompose",
        [](const std::vector<double>& sample, const KernelSpec& k,
           const DistributionSpec& dist) {
            auto d = hoeffding_decompose(sample, k, dist);
            py::dict out;
            out["n"] = d.n;
            out["m"] = d.m;
            out["u_raw"] = d.u_raw;
            out["theta"] = d.theta;
            out["sigma"] = d.sigma;
            out["u_std"] = d.u_n;
            out["w_n"] = d.w_n;
            out["v_n2"] = d.v_n2;
            out["xi"] = d.xi;
            out["q"] = d.q;
            out["psi"] = d.psi;
            out["s1_2"] = d.s1_2;
            out["s1_star2"] = d.s1_star2;
            out["d1n"] = d.d1n;
            out["d2n"] = d.d2n;
            out["lambda2"] = d.lambda2;
            out["t_n"] = d.t_n;
            out["t_star"] = d.t_star;
            return out;
        },
        py::arg("sample"), py::arg("kernel"), py::arg("dist"));

    m.def("normal_tail", &normal_tail, py::arg("x"));
    m.def("mills_psi", &mills_psi, py::arg("x"));
    m.def("delta_ix", &delta_ix, py::arg("dist"), py::arg("n"), py::arg("x"));
    m.def("L_nx", &L_nx, py::arg("dist"), py::arg("n"), py::arg("x"));
    m.def("I_nx", &I_nx, py::arg("dist"), py::arg("n"), py::arg("x"));
    m.def("envelope_jsw", &envelope_jsw, py::arg("dist"), py::arg("n"), py::arg("x"),
          py::arg("C"));
    m.def(
        "envelope_ustat",
        [](const KernelSpec& k, const DistributionSpec& d, int n, double x, double p,
           double C) {
            return envelope_ustat(n, x, ustat_envelope_params(k, d, p), C);
        },
        py::arg("kernel"), py::arg("dist"), py::arg("n"), py::arg("x"),
        py::arg("p") = 3.0, py::arg("C") = 1.0);

    py::class_<TiltedDistribution>(m, "TiltedDistribution")
        .def_property_readonly("normalizer", &TiltedDistribution::normalizer)
        .def("cdf", &TiltedDistribution::cdf, py::arg("y"))
        .def("quantile", &TiltedDistribution::quantile, py::arg("u"))
        .def("moments",
             [](const TiltedDistribution& t) {
                 auto mm = t.moments();
                 return py::make_tuple(mm.m_n, mm.sigma_n2, mm.v_n);
             })
        .def(
            "sample",
            [](const TiltedDistribution& t, std::size_t count, uint64_t seed,
               uint64_t stream) { return sample_tilted(t, count, {seed, stream}); },
            py::arg("count"), py::arg("seed"), py::arg("stream") = 0);

    m.def("build_tilted", &build_tilted, py::arg("dist"), py::arg("n"), py::arg("x"),
          py::arg("grid_size") = 4096);

    m.def(
        "estimate_tail_plain",
        [](const DistributionSpec& dist, const std::string& statistic,
           const std::string& kernel, int n, double x, uint64_t reps, uint64_t seed,
           uint64_t stream) {
            StatisticFn fn;
            if (statistic == "self-normalized-sum") {
                fn = self_normalized_statistic();
            } else if (statistic == "studentized-u") {
                auto k = builtin_kernel(kernel);
                fn = make_studentized_u_statistic(k, k.theta(dist));
            } else {
                throw invalid_parameter("unknown statistic: " + statistic);
            }
            return tail_dict(estimate_tail_plain(dist, fn, n, x, reps, {seed, stream}));
        },
        py::arg("dist"), py::arg("statistic"), py::arg("kernel"), py::arg("n"),
        py::arg("x"), py::arg("reps"), py::arg("seed"), py::arg("stream") = 0);

    m.def(
        "estimate_tail_tilted",
        [](const DistributionSpec& dist, int n, double x, double x_tilt,
           uint64_t reps, uint64_t seed, uint64_t stream) {
            auto tilted = build_tilted(dist, n, x_tilt);
            auto sv = self_normalized_statistic();
            return tail_dict(estimate_tail_tilted(
                tilted, [&](std::span<const double> s) { return sv(s) >= x; }, reps,
                {seed, stream}));
        },
        py::arg("dist"), py::arg("n"), py::arg("x"), py::arg("x_tilt"),
        py::arg("reps"), py::arg("seed"), py::arg("stream") = 0);

    m.def("stein_f", &stein_f, py::arg("x"), py::arg("w"));
    m.def("stein_f_dx", &stein_f_dx, py::arg("x"), py::arg("w"));

    m.def(
        "concentration_check",
        [](const DistributionSpec& dist, int n, const std::string& choice, double a,
           double b, double c, uint64_t reps, uint64_t seed, uint64_t stream) {
            ConcentrationConfig cc{dist};
            cc.n = n;
            cc.a = a;
            cc.b = b;
            cc.c = c;
            cc.reps = reps;
            cc.stream = {seed, stream};
            if (choice == "constants")
                cc.choice = DeltaChoice::constants;
            else if (choice == "v-squared-band")
                cc.choice = DeltaChoice::v_squared_band;
            else
                throw invalid_parameter("unknown delta choice: " + choice);
            auto rep = concentration_check(cc);
            py::dict out;
            out["lhs"] = rep.lhs;
            out["lhs_se"] = rep.lhs_se;
            out["rhs"] = rep.rhs;
            out["rhs_se"] = rep.rhs_se;
            out["margin"] = rep.margin;
            out["verdict"] = rep.verdict;
            out["beta2"] = rep.beta2;
            out["beta3"] = rep.beta3;
            return out;
        },
        py::arg("dist"), py::arg("n"), py::arg("choice") = "constants",
        py::arg("a") = -1.0, py::arg("b") = 1.0, py::arg("c") = 1.0,
        py::arg("reps") = 100000, py::arg("seed") = 0, py::arg("stream") = 0);

    m.def(
        "ratio_curve",
        [](const std::string& config_text) {
            auto cfg = parse_config_text(config_text);
            auto curve = run_ratio_curve(cfg);
            py::list rows;
            for (const auto& r : curve.rows) {
                py::dict row;
                row["n"] = r.n;
                row["x"] = r.x;
                row["tail_hat"] = r.tail_hat;
                row["tail_se"] = r.tail_se;
                row["gauss_tail"] = r.gauss_tail;
                row["ratio"] = r.ratio;
                row["ratio_lo"] = r.ratio_lo;
                row["ratio_hi"] = r.ratio_hi;
                row["envelope"] = r.envelope;
                row["L_nx"] = r.l_nx;
                row["in_range"] = r.in_range;
                rows.append(row);
            }
            return rows;
        },
        py::arg("config_text"),
        "Run a ratio-curve experiment from flat key=value config text.");
}
