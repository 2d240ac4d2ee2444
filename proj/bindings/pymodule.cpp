#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dosessr/bayespower.hpp"
#include "dosessr/design.hpp"
#include "dosessr/freqpower.hpp"
#include "dosessr/gaussian.hpp"
#include "dosessr/simengine.hpp"

namespace py = pybind11;
using namespace dosessr;

namespace {

design::ShapeModel make_shape(const std::string& model, std::optional<double> ed50,
                              std::optional<double> delta, std::optional<double> h,
                              const std::optional<Eigen::VectorXd>& means) {
    const auto need = [&](const std::optional<double>& v, const char* what) {
        if (!v) throw DomainError(model + " shape needs parameter '" + what + "'");
        return *v;
    };
    if (model == "linear") return design::ShapeModel::linear();
    if (model == "emax") return design::ShapeModel::emax(need(ed50, "ed50"));
    if (model == "exponential") return design::ShapeModel::exponential(need(delta, "delta"));
    if (model == "sigmoid_emax") {
        return design::ShapeModel::sigmoid_emax(need(ed50, "ed50"), need(h, "h"));
    }
    if (model == "custom") {
        if (!means) throw DomainError("custom shape needs parameter 'means'");
        return design::ShapeModel::custom(*means);
    }
    throw DomainError("unknown shape model: " + model);
}

design::ShapeModel shape_from_dict(const py::dict& d) {
    const auto model = d["model"].cast<std::string>();
    const auto opt_num = [&](const char* key) -> std::optional<double> {
        if (d.contains(key)) return d[key].cast<double>();
        return std::nullopt;
    };
    std::optional<Eigen::VectorXd> means;
    if (d.contains("means")) means = d["means"].cast<Eigen::VectorXd>();
    return make_shape(model, opt_num("ed50"), opt_num("delta"), opt_num("h"), means);
}

sim::Method method_from_name(const std::string& name) {
    if (name == "FQ1") return sim::Method::FQ1;
    if (name == "FQ2") return sim::Method::FQ2;
    if (name == "FQ3") return sim::Method::FQ3;
    if (name == "BY1") return sim::Method::BY1;
    if (name == "BY2") return sim::Method::BY2;
    if (name == "BY3") return sim::Method::BY3;
    throw DomainError("unknown method: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-stage adaptive dose-finding designs with sample size re-estimation";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    // gaussian
    m.def("norm_cdf", &gaussian::norm_cdf, py::arg("x"));
    m.def("norm_quantile", &gaussian::norm_quantile, py::arg("p"));

    py::class_<gaussian::QmcConfig>(m, "QmcConfig")
        .def(py::init([](int sample_budget, int randomizations, std::uint64_t seed, double abs_tol) {
                 gaussian::QmcConfig c{sample_budget, randomizations, seed, abs_tol};
                 c.validate();
                 return c;
             }),
             py::arg("sample_budget") = 4096, py::arg("randomizations") = 8,
             py::arg("seed") = 0x9d0e5eedu, py::arg("abs_tol") = 1e-4)
        .def_readwrite("sample_budget", &gaussian::QmcConfig::sample_budget)
        .def_readwrite("randomizations", &gaussian::QmcConfig::randomizations)
        .def_readwrite("seed", &gaussian::QmcConfig::seed)
        .def_readwrite("abs_tol", &gaussian::QmcConfig::abs_tol);

    py::class_<gaussian::MvnSpec>(m, "MvnSpec")
        .def(py::init<Eigen::VectorXd, Eigen::MatrixXd>(), py::arg("mean"), py::arg("cov"))
        .def_property_readonly("mean", &gaussian::MvnSpec::mean)
        .def_property_readonly("cov", &gaussian::MvnSpec::cov)
        .def_property_readonly("dim", &gaussian::MvnSpec::dim);

    m.def(
        "mvn_upper_orthant_cdf",
        [](const gaussian::MvnSpec& s, const Eigen::VectorXd& u, const gaussian::QmcConfig& c) {
            const auto e = gaussian::mvn_upper_orthant_cdf(s, u, c);
            return py::make_tuple(e.value, e.std_error);
        },
        py::arg("spec"), py::arg("upper"), py::arg("cfg") = gaussian::QmcConfig{});
    m.def(
        "mvn_equicoordinate_cdf",
        [](const gaussian::MvnSpec& s, double u, const gaussian::QmcConfig& c) {
            const auto e = gaussian::mvn_equicoordinate_cdf(s, u, c);
            return py::make_tuple(e.value, e.std_error);
        },
        py::arg("spec"), py::arg("u"), py::arg("cfg") = gaussian::QmcConfig{});
    m.def("mvn_equicoordinate_quantile", &gaussian::mvn_equicoordinate_quantile, py::arg("spec"),
          py::arg("p"), py::arg("cfg") = gaussian::QmcConfig{});

    // design
    py::class_<design::Allocation>(m, "Allocation")
        .def(py::init<Eigen::VectorXd>(), py::arg("phi"))
        .def_static("equal", &design::Allocation::equal, py::arg("k"))
        .def_property_readonly("weights", &design::Allocation::weights);

    py::class_<design::ContrastSet>(m, "ContrastSet")
        .def(py::init<Eigen::MatrixXd>(), py::arg("rows"))
        .def_property_readonly("matrix", &design::ContrastSet::matrix);

    py::class_<design::DoseResponseProfile>(m, "DoseResponseProfile")
        .def_readonly("doses", &design::DoseResponseProfile::doses)
        .def_readonly("means", &design::DoseResponseProfile::means)
        .def_readonly("label", &design::DoseResponseProfile::label);

    m.def(
        "shape_profile",
        [](const std::string& model, const Eigen::VectorXd& doses, std::optional<double> ed50,
           std::optional<double> delta, std::optional<double> h,
           std::optional<Eigen::VectorXd> means) {
            return design::shape_profile(make_shape(model, ed50, delta, h, means), doses);
        },
        py::arg("model"), py::arg("doses"), py::arg("ed50") = std::nullopt,
        py::arg("delta") = std::nullopt, py::arg("h") = std::nullopt,
        py::arg("means") = std::nullopt);
    m.def("optimal_contrast", &design::optimal_contrast, py::arg("mu0"), py::arg("phi"));
    m.def(
        "optimal_contrasts",
        [](const std::vector<py::dict>& models, const Eigen::VectorXd& doses,
           const design::Allocation& phi) {
            std::vector<design::ShapeModel> shapes;
            shapes.reserve(models.size());
            for (const auto& d : models) {
                shapes.push_back(shape_from_dict(d));
            }
            return design::optimal_contrasts(shapes, doses, phi);
        },
        py::arg("models"), py::arg("doses"), py::arg("phi"));
    m.def("stage_weight", &design::stage_weight, py::arg("c"), py::arg("n"), py::arg("phi"));

    py::class_<design::TwoStageDesign>(m, "TwoStageDesign")
        .def(py::init<Eigen::VectorXd, double, design::Allocation, design::Allocation, double,
                      double, design::ContrastSet, double, double, double, double>(),
             py::arg("doses"), py::arg("sigma"), py::arg("alloc1"), py::arg("alloc2"),
             py::arg("n1"), py::arg("n2"), py::arg("contrasts"), py::arg("alpha"), py::arg("beta"),
             py::arg("n_max"), py::arg("cp_min"))
        .def_readonly("doses", &design::TwoStageDesign::doses)
        .def_readonly("sigma", &design::TwoStageDesign::sigma)
        .def_readonly("n1", &design::TwoStageDesign::n1)
        .def_readonly("n2", &design::TwoStageDesign::n2)
        .def_readonly("alpha", &design::TwoStageDesign::alpha)
        .def_readonly("beta", &design::TwoStageDesign::beta)
        .def_readonly("n_max", &design::TwoStageDesign::n_max)
        .def_readonly("cp_min", &design::TwoStageDesign::cp_min)
        .def_property_readonly("contrast_matrix",
                               [](const design::TwoStageDesign& d) { return d.contrasts.matrix(); })
        .def("z_alpha", &design::TwoStageDesign::z_alpha);

    py::enum_<design::Rounding>(m, "Rounding")
        .value("none", design::Rounding::none)
        .value("per_arm_equal", design::Rounding::per_arm_equal);

    m.def("single_power", &design::single_power, py::arg("delta"), py::arg("c"), py::arg("phi"),
          py::arg("sigma"), py::arg("n"), py::arg("alpha"));
    m.def("single_sample_size", &design::single_sample_size, py::arg("delta"), py::arg("c"),
          py::arg("phi"), py::arg("sigma"), py::arg("alpha"), py::arg("beta"),
          py::arg("rounding") = design::Rounding::none);
    m.def("mcp_critical_value", &design::mcp_critical_value, py::arg("design"),
          py::arg("cfg") = gaussian::QmcConfig{});
    m.def("mcp_power", &design::mcp_power, py::arg("mu"), py::arg("design"), py::arg("u_alpha"),
          py::arg("n"), py::arg("cfg") = gaussian::QmcConfig{});
    m.def("mcp_sample_size", &design::mcp_sample_size, py::arg("mu"), py::arg("design"),
          py::arg("u_alpha"), py::arg("beta"), py::arg("rounding") = design::Rounding::none,
          py::arg("cfg") = gaussian::QmcConfig{});

    // freq
    py::enum_<freq::Zone>(m, "Zone")
        .value("unfavorable", freq::Zone::unfavorable)
        .value("favorable", freq::Zone::favorable)
        .value("promising", freq::Zone::promising);

    py::class_<freq::InterimState>(m, "InterimState")
        .def_static("from_means", &freq::InterimState::from_means, py::arg("ybar1"), py::arg("n1"),
                    py::arg("phi1"), py::arg("contrasts"), py::arg("sigma"))
        .def_property_readonly("ybar1", &freq::InterimState::ybar1)
        .def_property_readonly("n1", &freq::InterimState::n1)
        .def_property_readonly("t1", &freq::InterimState::t1);

    py::class_<freq::SsrDecision>(m, "SsrDecision")
        .def_readonly("zone", &freq::SsrDecision::zone)
        .def_readonly("n2_new", &freq::SsrDecision::n2_new)
        .def_readonly("metric_at_n2", &freq::SsrDecision::metric_at_n2)
        .def_readonly("metric_at_zero", &freq::SsrDecision::metric_at_zero);

    m.def("stage_statistic", &freq::stage_statistic, py::arg("ybar"), py::arg("n"), py::arg("phi"),
          py::arg("c"), py::arg("sigma"));
    m.def("combine", &freq::combine, py::arg("t1"), py::arg("t2"), py::arg("w1"), py::arg("w2"));
    m.def("combine_multi", &freq::combine_multi, py::arg("t1"), py::arg("t2"), py::arg("w1_diag"),
          py::arg("w2_diag"));
    m.def("conditional_power_single", &freq::conditional_power_single, py::arg("n2"),
          py::arg("delta"), py::arg("interim"), py::arg("design"));
    m.def("conditional_power_multi", &freq::conditional_power_multi, py::arg("n2"),
          py::arg("delta_vec"), py::arg("interim"), py::arg("design"), py::arg("u_alpha"),
          py::arg("cfg") = gaussian::QmcConfig{});
    m.def(
        "cp_ssr_decide",
        [](const freq::InterimState& interim, const design::TwoStageDesign& d,
           const std::string& source, std::optional<Eigen::VectorXd> fixed_delta,
           std::optional<double> u_alpha, const gaussian::QmcConfig& cfg) {
            freq::DeltaSource s = freq::DeltaSource::observed();
            if (source == "fixed") {
                if (!fixed_delta) throw DomainError("cp_ssr_decide: fixed source needs a delta");
                s = freq::DeltaSource::fixed(*fixed_delta);
            } else if (source != "observed") {
                throw DomainError("cp_ssr_decide: source must be 'observed' or 'fixed'");
            }
            if (d.n_contrasts() == 1) return freq::cp_ssr_decide(interim, d, s);
            if (!u_alpha) throw DomainError("cp_ssr_decide: multi-contrast designs need u_alpha");
            return freq::cp_ssr_decide(interim, d, s, *u_alpha, cfg);
        },
        py::arg("interim"), py::arg("design"), py::arg("source") = "observed",
        py::arg("fixed_delta") = std::nullopt, py::arg("u_alpha") = std::nullopt,
        py::arg("cfg") = gaussian::QmcConfig{});
    m.def("final_test", py::overload_cast<double, double>(&freq::final_test), py::arg("t"),
          py::arg("critical"));
    m.def("final_test_multi", py::overload_cast<const Eigen::VectorXd&, double>(&freq::final_test),
          py::arg("t"), py::arg("critical"));

    // bayes
    py::class_<bayes::Prior>(m, "Prior")
        .def_static("flat", &bayes::Prior::flat)
        .def_static("conjugate_normal", &bayes::Prior::conjugate_normal, py::arg("mu0"),
                    py::arg("tau0"))
        .def_static("general", &bayes::Prior::general, py::arg("log_density"));

    py::class_<bayes::PosteriorNormal>(m, "PosteriorNormal")
        .def(py::init([](Eigen::VectorXd mean, Eigen::MatrixXd cov) {
                 return bayes::PosteriorNormal{std::move(mean), std::move(cov)};
             }),
             py::arg("mean"), py::arg("cov"))
        .def_readonly("mean", &bayes::PosteriorNormal::mean)
        .def_readonly("cov", &bayes::PosteriorNormal::cov);

    m.def("posterior", &bayes::posterior, py::arg("prior"), py::arg("interim"), py::arg("sigma"));
    m.def("pp_closed_form_single", &bayes::pp_closed_form_single, py::arg("post"), py::arg("n2"),
          py::arg("interim"), py::arg("design"));
    m.def("pp_closed_form_multi", &bayes::pp_closed_form_multi, py::arg("post"), py::arg("n2"),
          py::arg("interim"), py::arg("design"), py::arg("u_alpha"),
          py::arg("cfg") = gaussian::QmcConfig{});
    m.def(
        "pp_monte_carlo",
        [](const std::vector<Eigen::VectorXd>& samples, double n2, const freq::InterimState& interim,
           const design::TwoStageDesign& d, double critical, const gaussian::QmcConfig& cfg) {
            const auto e = bayes::pp_monte_carlo(samples, n2, interim, d, critical, cfg);
            return py::make_tuple(e.value, e.std_error);
        },
        py::arg("posterior_samples"), py::arg("n2"), py::arg("interim"), py::arg("design"),
        py::arg("critical"), py::arg("cfg") = gaussian::QmcConfig{});
    m.def("pp_at_zero", &bayes::pp_at_zero, py::arg("post"), py::arg("interim"), py::arg("design"),
          py::arg("critical"), py::arg("cfg") = gaussian::QmcConfig{});
    m.def(
        "pp_ssr_decide",
        [](const freq::InterimState& interim, const design::TwoStageDesign& d,
           const bayes::Prior& prior, std::optional<double> u_alpha,
           const gaussian::QmcConfig& cfg) {
            if (d.n_contrasts() == 1) return bayes::pp_ssr_decide(interim, d, prior);
            if (!u_alpha) throw DomainError("pp_ssr_decide: multi-contrast designs need u_alpha");
            return bayes::pp_ssr_decide(interim, d, prior, *u_alpha, cfg);
        },
        py::arg("interim"), py::arg("design"), py::arg("prior"), py::arg("u_alpha") = std::nullopt,
        py::arg("cfg") = gaussian::QmcConfig{});

    // simulation
    py::class_<sim::MethodSpec>(m, "MethodSpec")
        .def_static(
            "make",
            [](const std::string& name, std::optional<Eigen::VectorXd> assumed_mu,
               std::optional<Eigen::VectorXd> mu0, std::optional<Eigen::VectorXd> tau0) {
                const sim::Method kind = method_from_name(name);
                switch (kind) {
                    case sim::Method::FQ1: return sim::MethodSpec::fq1();
                    case sim::Method::FQ2: return sim::MethodSpec::fq2(assumed_mu.value());
                    case sim::Method::FQ3: return sim::MethodSpec::fq3(assumed_mu.value());
                    case sim::Method::BY1: return sim::MethodSpec::by1();
                    case sim::Method::BY2: return sim::MethodSpec::by2(mu0.value(), tau0.value());
                    case sim::Method::BY3: return sim::MethodSpec::by3(mu0.value(), tau0.value());
                }
                throw DomainError("unreachable");
            },
            py::arg("name"), py::arg("assumed_mu") = std::nullopt, py::arg("mu0") = std::nullopt,
            py::arg("tau0") = std::nullopt);

    py::class_<sim::Scenario>(m, "Scenario")
        .def(py::init([](const design::TwoStageDesign& d, Eigen::VectorXd true_mu,
                         const sim::MethodSpec& method, int replicates, std::uint64_t master_seed) {
                 sim::Scenario s{d, std::move(true_mu), method, replicates, master_seed};
                 s.validate();
                 return s;
             }),
             py::arg("design"), py::arg("true_mu"), py::arg("method"), py::arg("replicates"),
             py::arg("master_seed"));

    py::class_<sim::TrialOutcome>(m, "TrialOutcome")
        .def_readonly("zone", &sim::TrialOutcome::zone)
        .def_readonly("metric_at_n2", &sim::TrialOutcome::metric_at_n2)
        .def_readonly("final_n2", &sim::TrialOutcome::final_n2)
        .def_readonly("total_n", &sim::TrialOutcome::total_n)
        .def_readonly("rejected", &sim::TrialOutcome::rejected);

    py::class_<sim::SimulationReport>(m, "SimulationReport")
        .def_readonly("pct_unfavorable", &sim::SimulationReport::pct_unfavorable)
        .def_readonly("pct_favorable", &sim::SimulationReport::pct_favorable)
        .def_readonly("pct_promising", &sim::SimulationReport::pct_promising)
        .def_readonly("metric_mean", &sim::SimulationReport::metric_mean)
        .def_readonly("metric_sd", &sim::SimulationReport::metric_sd)
        .def_readonly("power", &sim::SimulationReport::power)
        .def_readonly("mean_ss", &sim::SimulationReport::mean_ss)
        .def_readonly("mean_incr", &sim::SimulationReport::mean_incr)
        .def_readonly("replicates", &sim::SimulationReport::replicates)
        .def_readonly("mc_se_power", &sim::SimulationReport::mc_se_power);

    py::class_<sim::MetricDistribution>(m, "MetricDistribution")
        .def_readonly("values", &sim::MetricDistribution::values)
        .def_readonly("q25", &sim::MetricDistribution::q25)
        .def_readonly("q50", &sim::MetricDistribution::q50)
        .def_readonly("q75", &sim::MetricDistribution::q75);

    m.def("draw_stage_means", &sim::draw_stage_means, py::arg("mu"), py::arg("sigma"), py::arg("n"),
          py::arg("phi"), py::arg("seed"), py::arg("replicate"), py::arg("stage"));
    m.def("run_trial", &sim::run_trial, py::arg("scenario"), py::arg("replicate_index"));
    m.def("run_study", &sim::run_study, py::arg("scenario"), py::arg("threads") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("metric_distribution", &sim::metric_distribution, py::arg("scenario"),
          py::arg("threads") = 0, py::call_guard<py::gil_scoped_release>());

#ifdef VERSION_INFO
#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = "0.1.0";
#endif
}
