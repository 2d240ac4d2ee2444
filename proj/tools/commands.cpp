#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dosessr/bayespower.hpp"
#include "dosessr/freqpower.hpp"
#include "dosessr/rng.hpp"

namespace dosessr::cli {

using nlohmann::ordered_json;

const char* kSimulateCsvHeader =
    "scenario,timing,method,pct_unfavorable,pct_favorable,pct_promising,"
    "metric_mean,metric_sd,power,mean_ss,mean_incr,replicates,mc_se_power";

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

Eigen::VectorXd resolve_mu(const SpecFile& spec, const std::optional<Eigen::VectorXd>& mu,
                           const char* what) {
    if (mu) {
        if (mu->size() != spec.arms()) {
            throw SpecError("E_DIM_MISMATCH",
                            std::string(what) + ": mean vector must have one entry per arm");
        }
        return *mu;
    }
    if (spec.scenarios.empty()) {
        throw SpecError("E_SCHEMA", std::string(what) +
                                        ": no mean vector given and the spec has no simulate "
                                        "scenario to take one from");
    }
    return spec.scenarios.front().true_mu;
}

gaussian::QmcConfig spec_qmc(const SpecFile& spec) {
    gaussian::QmcConfig cfg;
    cfg.seed = rng::splitmix64(spec.seed ^ 0xD0E55EEDull);
    return cfg;
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t scenario_idx, std::size_t stage_idx) {
    return rng::splitmix64(base + 1000003ull * scenario_idx + 1009ull * stage_idx);
}

}  // namespace

int cmd_contrast(const SpecFile& spec, std::ostream& out) {
    const design::ContrastSet contrasts = spec.build_contrasts();
    const Eigen::MatrixXd& c = contrasts.matrix();
    std::ostringstream buf;
    for (int r = 0; r < c.rows(); ++r) {
        for (int i = 0; i < c.cols(); ++i) {
            if (i) buf << ",";
            buf << fmt("%.3f", c(r, i));
        }
        buf << "\n";
    }
    out << buf.str();
    return 0;
}

int cmd_power(const SpecFile& spec, const PowerOptions& opt, std::ostream& out) {
    if (!opt.n) {
        throw SpecError("E_SCHEMA", "power: a total sample size (--n) is required");
    }
    const StageSpec& stage = spec.stage_by_label(opt.timing);
    const design::TwoStageDesign d = spec.build_design(stage);
    const Eigen::VectorXd mu = resolve_mu(spec, opt.mu, "power");

    ordered_json j;
    j["command"] = "power";
    j["timing"] = stage.label;
    j["n"] = *opt.n;
    j["alpha"] = spec.alpha;
    if (d.n_contrasts() == 1) {
        const Eigen::VectorXd c = d.contrasts.row(0);
        const double delta = c.dot(mu);
        j["test"] = "single_contrast";
        j["delta"] = delta;
        j["power"] = design::single_power(delta, c, d.alloc2, d.sigma, *opt.n, d.alpha);
    } else {
        const double u_alpha = design::mcp_critical_value(d, spec_qmc(spec));
        j["test"] = "multiple_contrast";
        j["u_alpha"] = u_alpha;
        j["power"] = design::mcp_power(mu, d, u_alpha, *opt.n, spec_qmc(spec));
    }
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_samplesize(const SpecFile& spec, const SampleSizeOptions& opt, std::ostream& out) {
    const StageSpec& stage = spec.stage_by_label(opt.timing);
    const design::TwoStageDesign d = spec.build_design(stage);
    const Eigen::VectorXd mu = resolve_mu(spec, opt.mu, "samplesize");
    const double target = opt.target_power.value_or(spec.target_power);
    if (!(target > 0.5 && target < 1.0)) {
        throw SpecError("E_SCHEMA", "samplesize: target power must lie in (0.5, 1)");
    }
    design::Rounding rounding;
    if (opt.rounding == "none") {
        rounding = design::Rounding::none;
    } else if (opt.rounding == "per_arm_equal") {
        rounding = design::Rounding::per_arm_equal;
    } else {
        throw SpecError("E_SCHEMA", "samplesize: rounding must be 'none' or 'per_arm_equal'");
    }

    ordered_json j;
    j["command"] = "samplesize";
    j["timing"] = stage.label;
    j["alpha"] = spec.alpha;
    j["target_power"] = target;
    j["rounding"] = opt.rounding;
    if (d.n_contrasts() == 1) {
        const Eigen::VectorXd c = d.contrasts.row(0);
        const double delta = c.dot(mu);
        const double n_cont =
            design::single_sample_size(delta, c, d.alloc2, d.sigma, d.alpha, 1.0 - target);
        j["test"] = "single_contrast";
        j["delta"] = delta;
        j["n_continuous"] = n_cont;
        j["n"] = design::round_sample_size(n_cont, d.arms(), rounding);
    } else {
        const double u_alpha = design::mcp_critical_value(d, spec_qmc(spec));
        const double n_cont =
            design::mcp_sample_size(mu, d, u_alpha, 1.0 - target, design::Rounding::none,
                                    spec_qmc(spec));
        j["test"] = "multiple_contrast";
        j["u_alpha"] = u_alpha;
        j["n_continuous"] = n_cont;
        j["n"] = design::round_sample_size(n_cont, d.arms(), rounding);
    }
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_ssr(const SpecFile& spec, const SsrOptions& opt, std::ostream& out) {
    if (spec.methods.empty()) {
        throw SpecError("E_METHOD_PARAMS", "ssr: the spec file declares no ssr methods");
    }
    const StageSpec& stage = spec.stage_by_label(opt.timing);
    const MethodEntry& entry = spec.method_by_name(opt.method);
    const design::TwoStageDesign d = spec.build_design(stage);
    const int k = spec.arms();
    if (opt.stage1_means.size() != k) {
        throw SpecError("E_DIM_MISMATCH", "ssr: stage-1 means must have one entry per arm");
    }
    if (opt.stage1_sizes.size() != k) {
        throw SpecError("E_DIM_MISMATCH", "ssr: stage-1 sizes must have one entry per arm");
    }
    if ((opt.stage1_sizes.array() <= 0.0).any()) {
        throw SpecError("E_SCHEMA", "ssr: stage-1 per-arm sizes must be positive");
    }
    const double n1 = opt.stage1_sizes.sum();
    const design::Allocation phi1(opt.stage1_sizes / n1);
    const freq::InterimState interim =
        freq::InterimState::from_means(opt.stage1_means, n1, phi1, d.contrasts, d.sigma);

    const bool multi = d.n_contrasts() > 1;
    double u_alpha = d.z_alpha();
    if (multi) u_alpha = design::mcp_critical_value(d, spec_qmc(spec));

    freq::SsrDecision decision;
    const sim::Method m = entry.method;
    if (m == sim::Method::FQ1 || m == sim::Method::FQ2 || m == sim::Method::FQ3) {
        const freq::DeltaSource source =
            (m == sim::Method::FQ1)
                ? freq::DeltaSource::observed()
                : freq::DeltaSource::fixed(d.contrasts.matrix() * entry.assumed_mu);
        decision = multi ? freq::cp_ssr_decide(interim, d, source, u_alpha, spec_qmc(spec))
                         : freq::cp_ssr_decide(interim, d, source);
    } else {
        const bayes::Prior prior =
            (m == sim::Method::BY1)
                ? bayes::Prior::flat()
                : bayes::Prior::conjugate_normal(entry.prior_mu0, entry.prior_tau0);
        decision = multi ? bayes::pp_ssr_decide(interim, d, prior, u_alpha, spec_qmc(spec))
                         : bayes::pp_ssr_decide(interim, d, prior);
    }

    ordered_json j;
    j["command"] = "ssr";
    j["timing"] = stage.label;
    j["method"] = entry.name;
    j["zone"] = freq::zone_name(decision.zone);
    j["metric_at_n2"] = decision.metric_at_n2;
    if (decision.metric_at_zero) {
        j["pp_at_zero"] = *decision.metric_at_zero;
    }
    j["n2_new"] = decision.n2_new;
    j["n2_new_rounded"] = std::ceil(decision.n2_new - 1e-9);
    if (multi) j["u_alpha"] = u_alpha;
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const SpecFile& spec, const SimulateOptions& opt, std::ostream& out) {
    if (spec.methods.empty()) {
        throw SpecError("E_METHOD_PARAMS", "simulate: the spec file declares no ssr methods");
    }
    if (spec.scenarios.empty()) {
        throw SpecError("E_SCHEMA", "simulate: the spec file declares no scenarios");
    }
    const long replicates = opt.replicates_override.value_or(spec.replicates);
    if (replicates < 100) {
        throw SpecError("E_SCHEMA", "simulate: at least 100 replicates are required");
    }
    const std::uint64_t base_seed = opt.seed_override.value_or(spec.seed);

    std::ostringstream csv;
    csv << kSimulateCsvHeader << "\n";
    std::ostringstream dump;
    if (!opt.dump_metrics_path.empty()) {
        dump << "scenario,timing,method,replicate,metric_at_n2\n";
    }

    for (std::size_t si = 0; si < spec.scenarios.size(); ++si) {
        const ScenarioSpec& scen = spec.scenarios[si];
        for (std::size_t ti = 0; ti < spec.stages.size(); ++ti) {
            const StageSpec& stage = spec.stages[ti];
            const design::TwoStageDesign d = spec.build_design(stage);
            for (const MethodEntry& entry : spec.methods) {
                sim::Scenario scenario{d, scen.true_mu, spec.build_method(entry),
                                       static_cast<int>(replicates), cell_seed(base_seed, si, ti)};
                const sim::ScenarioEngine engine(std::move(scenario));
                const sim::StudyResult result = engine.run_full(opt.threads);
                const sim::SimulationReport& rep = result.report;
                csv << scen.label << "," << stage.label << "," << entry.name << ","
                    << fmt("%.2f", rep.pct_unfavorable) << "," << fmt("%.2f", rep.pct_favorable)
                    << "," << fmt("%.2f", rep.pct_promising) << ","
                    << fmt("%.4f", rep.metric_mean) << "," << fmt("%.4f", rep.metric_sd) << ","
                    << fmt("%.4f", rep.power) << "," << fmt("%.2f", rep.mean_ss) << ","
                    << fmt("%.2f", rep.mean_incr) << "," << rep.replicates << ","
                    << fmt("%.5f", rep.mc_se_power) << "\n";
                if (!opt.dump_metrics_path.empty()) {
                    for (std::size_t i = 0; i < result.metrics.values.size(); ++i) {
                        dump << scen.label << "," << stage.label << "," << entry.name << "," << i
                             << "," << fmt("%.6f", result.metrics.values[i]) << "\n";
                    }
                }
            }
        }
    }

    // Nothing is emitted until every cell has finished, so a failure never
    // leaves partial output behind.
    if (!opt.dump_metrics_path.empty()) {
        std::ofstream f(opt.dump_metrics_path);
        if (!f) {
            throw SpecError("E_IO", "cannot write metric dump to " + opt.dump_metrics_path);
        }
        f << dump.str();
    }
    out << csv.str();
    return 0;
}

}  // namespace dosessr::cli
