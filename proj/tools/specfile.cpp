#include "specfile.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dosessr::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& code, const std::string& message) {
    throw SpecError(code, message);
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        fail("E_SCHEMA", where + ": missing required field '" + key + "'");
    }
    return obj.at(key);
}

double require_number(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number()) fail("E_SCHEMA", where + "." + key + ": expected a number");
    return v.get<double>();
}

Eigen::VectorXd require_vector(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_array() || v.empty()) fail("E_SCHEMA", where + "." + key + ": expected a non-empty array");
    Eigen::VectorXd out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail("E_SCHEMA", where + "." + key + ": expected numeric entries");
        out[static_cast<int>(i)] = v[i].get<double>();
    }
    return out;
}

void check_allocation(const Eigen::VectorXd& phi, int k, const std::string& where) {
    if (phi.size() != k) {
        fail("E_DIM_MISMATCH", where + ": expected " + std::to_string(k) + " entries");
    }
    if ((phi.array() <= 0.0).any()) {
        fail("E_PHI_POSITIVE", where + ": allocation entries must be strictly positive");
    }
    if (std::abs(phi.sum() - 1.0) > 1e-12) {
        fail("E_PHI_SUM", where + ": allocation must sum to one");
    }
}

StageSpec parse_stage(const json& j, const std::string& where, int k) {
    StageSpec s;
    s.label = j.value("label", "stage");
    s.n1 = require_number(j, "n1", where);
    s.n2 = require_number(j, "n2", where);
    s.n_max = require_number(j, "n_max", where);
    if (!(s.n1 > 0.0) || !(s.n2 > 0.0)) {
        fail("E_SCHEMA", where + ": n1 and n2 must be positive");
    }
    if (s.n_max < s.n2) {
        fail("E_NMAX_LT_N2", where + ": n_max must be at least n2 (sample size never decreases)");
    }
    if (j.contains("phi1")) {
        s.phi1 = require_vector(j, "phi1", where);
    } else {
        s.phi1 = Eigen::VectorXd::Constant(k, 1.0 / k);
    }
    if (j.contains("phi2")) {
        s.phi2 = require_vector(j, "phi2", where);
    } else {
        s.phi2 = s.phi1;
    }
    check_allocation(s.phi1, k, where + ".phi1");
    check_allocation(s.phi2, k, where + ".phi2");
    return s;
}

design::ShapeModel parse_shape(const json& j, const std::string& where) {
    const json& m = require(j, "model", where);
    const std::string name = m.get<std::string>();
    if (name == "linear") return design::ShapeModel::linear();
    if (name == "emax") return design::ShapeModel::emax(require_number(j, "ed50", where));
    if (name == "exponential") {
        return design::ShapeModel::exponential(require_number(j, "delta", where));
    }
    if (name == "sigmoid_emax") {
        return design::ShapeModel::sigmoid_emax(require_number(j, "ed50", where),
                                                require_number(j, "h", where));
    }
    if (name == "custom") {
        return design::ShapeModel::custom(require_vector(j, "means", where));
    }
    fail("E_SCHEMA", where + ": unknown shape model '" + name + "'");
}

sim::Method parse_method_name(const std::string& name, const std::string& where) {
    if (name == "FQ1") return sim::Method::FQ1;
    if (name == "FQ2") return sim::Method::FQ2;
    if (name == "FQ3") return sim::Method::FQ3;
    if (name == "BY1") return sim::Method::BY1;
    if (name == "BY2") return sim::Method::BY2;
    if (name == "BY3") return sim::Method::BY3;
    fail("E_SCHEMA", where + ": unknown method '" + name + "' (expected FQ1..FQ3, BY1..BY3)");
}

MethodEntry parse_method(const json& j, const std::string& where, int k) {
    MethodEntry e;
    e.name = require(j, "name", where).get<std::string>();
    e.method = parse_method_name(e.name, where);

    const std::string rule = j.value("rule", e.name[0] == 'B' ? "pp" : "cp");
    const bool bayesian = e.method >= sim::Method::BY1;
    if ((rule == "pp") != bayesian) {
        fail("E_METHOD_PARAMS", where + ": rule '" + rule + "' contradicts method " + e.name);
    }

    if (e.method == sim::Method::FQ2 || e.method == sim::Method::FQ3) {
        if (!j.contains("delta_source") || !j.at("delta_source").is_object() ||
            !j.at("delta_source").contains("profile")) {
            fail("E_METHOD_PARAMS",
                 where + ": " + e.name + " needs delta_source.profile (assumed mean vector)");
        }
        e.assumed_mu = require_vector(j.at("delta_source"), "profile", where + ".delta_source");
        if (e.assumed_mu.size() != k) {
            fail("E_DIM_MISMATCH", where + ".delta_source.profile: expected " + std::to_string(k) +
                                       " entries");
        }
    }
    if (e.method == sim::Method::BY2 || e.method == sim::Method::BY3) {
        if (!j.contains("prior") || !j.at("prior").is_object()) {
            fail("E_METHOD_PARAMS", where + ": " + e.name + " needs a conjugate prior");
        }
        const json& p = j.at("prior");
        const std::string kind = p.value("kind", "conjugate");
        if (kind != "conjugate") {
            fail("E_METHOD_PARAMS", where + ".prior: simulation methods support kind 'conjugate'");
        }
        e.prior_mu0 = require_vector(p, "mu0", where + ".prior");
        e.prior_tau0 = require_vector(p, "tau0", where + ".prior");
        if (e.prior_mu0.size() != k || e.prior_tau0.size() != k) {
            fail("E_DIM_MISMATCH", where + ".prior: mu0/tau0 must have " + std::to_string(k) +
                                       " entries");
        }
        if ((e.prior_tau0.array() <= 0.0).any()) {
            fail("E_METHOD_PARAMS", where + ".prior.tau0: precisions must be positive");
        }
    }
    return e;
}

}  // namespace

design::ContrastSet SpecFile::build_contrasts() const {
    if (contrast_matrix) {
        return design::ContrastSet(*contrast_matrix);
    }
    return design::optimal_contrasts(shapes, doses, design::Allocation(stages.front().phi1));
}

design::TwoStageDesign SpecFile::build_design(const StageSpec& stage) const {
    return design::TwoStageDesign(doses, sigma, design::Allocation(stage.phi1),
                                  design::Allocation(stage.phi2), stage.n1, stage.n2,
                                  build_contrasts(), alpha, 1.0 - target_power, stage.n_max,
                                  cp_min);
}

const StageSpec& SpecFile::stage_by_label(const std::string& label) const {
    if (label.empty()) return stages.front();
    for (const StageSpec& s : stages) {
        if (s.label == label) return s;
    }
    throw SpecError("E_SCHEMA", "no stage timing labelled '" + label + "' in the spec file");
}

const MethodEntry& SpecFile::method_by_name(const std::string& name) const {
    if (name.empty()) return methods.front();
    for (const MethodEntry& m : methods) {
        if (m.name == name) return m;
    }
    throw SpecError("E_SCHEMA", "no ssr method named '" + name + "' in the spec file");
}

sim::MethodSpec SpecFile::build_method(const MethodEntry& entry) const {
    switch (entry.method) {
        case sim::Method::FQ1: return sim::MethodSpec::fq1();
        case sim::Method::FQ2: return sim::MethodSpec::fq2(entry.assumed_mu);
        case sim::Method::FQ3: return sim::MethodSpec::fq3(entry.assumed_mu);
        case sim::Method::BY1: return sim::MethodSpec::by1();
        case sim::Method::BY2: return sim::MethodSpec::by2(entry.prior_mu0, entry.prior_tau0);
        case sim::Method::BY3: return sim::MethodSpec::by3(entry.prior_mu0, entry.prior_tau0);
    }
    throw SpecError("E_SCHEMA", "unknown method kind");
}

SpecFile parse_spec_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail("E_JSON_PARSE", std::string("spec file is not valid JSON: ") + e.what());
    }

    SpecFile spec;

    const json& arms = require(root, "arms", "spec");
    spec.doses = require_vector(arms, "doses", "arms");
    if (spec.doses.size() < 3) {
        fail("E_SCHEMA", "arms.doses: at least three arms are required");
    }
    for (int i = 1; i < spec.doses.size(); ++i) {
        if (!(spec.doses[i] > spec.doses[i - 1])) {
            fail("E_SCHEMA", "arms.doses: must be strictly increasing");
        }
    }
    spec.sigma = require_number(arms, "sigma", "arms");
    if (!(spec.sigma > 0.0)) fail("E_SCHEMA", "arms.sigma: must be positive");
    const int k = spec.arms();

    const json& stages = require(root, "stages", "spec");
    if (stages.is_array()) {
        for (std::size_t i = 0; i < stages.size(); ++i) {
            spec.stages.push_back(parse_stage(stages[i], "stages[" + std::to_string(i) + "]", k));
        }
    } else {
        spec.stages.push_back(parse_stage(stages, "stages", k));
    }
    if (spec.stages.empty()) fail("E_SCHEMA", "stages: at least one timing is required");

    const json& test = require(root, "test", "spec");
    spec.alpha = require_number(test, "alpha", "test");
    if (!(spec.alpha > 0.0 && spec.alpha < 0.5)) {
        fail("E_ALPHA_RANGE", "test.alpha: must lie strictly in (0, 0.5)");
    }
    const json& contrasts = require(test, "contrasts", "test");
    if (contrasts.contains("shapes")) {
        const json& shapes = contrasts.at("shapes");
        if (!shapes.is_array() || shapes.empty()) {
            fail("E_SCHEMA", "test.contrasts.shapes: expected a non-empty array");
        }
        for (std::size_t i = 0; i < shapes.size(); ++i) {
            spec.shapes.push_back(
                parse_shape(shapes[i], "test.contrasts.shapes[" + std::to_string(i) + "]"));
        }
    } else if (contrasts.contains("matrix")) {
        const json& rows = contrasts.at("matrix");
        if (!rows.is_array() || rows.empty()) {
            fail("E_SCHEMA", "test.contrasts.matrix: expected a non-empty array of rows");
        }
        Eigen::MatrixXd m(static_cast<int>(rows.size()), k);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != k) {
                fail("E_DIM_MISMATCH", "test.contrasts.matrix: each row needs " +
                                           std::to_string(k) + " entries");
            }
            for (int i = 0; i < k; ++i) m(static_cast<int>(r), i) = rows[r][i].get<double>();
        }
        spec.contrast_matrix = m;
    } else {
        fail("E_SCHEMA", "test.contrasts: provide either 'shapes' or 'matrix'");
    }

    if (root.contains("ssr")) {
        const json& ssr = root.at("ssr");
        if (ssr.contains("cp_min")) spec.cp_min = ssr.at("cp_min").get<double>();
        if (ssr.contains("pp_min")) spec.cp_min = ssr.at("pp_min").get<double>();
        spec.target_power = ssr.value("target_power", 0.8);
        if (!(spec.target_power > 0.5 && spec.target_power < 1.0)) {
            fail("E_SCHEMA", "ssr.target_power: must lie in (0.5, 1)");
        }
        if (!(spec.cp_min > 0.0 && spec.cp_min < spec.target_power)) {
            fail("E_SCHEMA", "ssr.cp_min: must lie in (0, target_power)");
        }
        if (ssr.contains("methods")) {
            const json& methods = ssr.at("methods");
            if (!methods.is_array() || methods.empty()) {
                fail("E_SCHEMA", "ssr.methods: expected a non-empty array");
            }
            for (std::size_t i = 0; i < methods.size(); ++i) {
                spec.methods.push_back(
                    parse_method(methods[i], "ssr.methods[" + std::to_string(i) + "]", k));
            }
        }
    }

    if (root.contains("simulate")) {
        const json& simulate = root.at("simulate");
        if (simulate.contains("scenarios")) {
            const json& scen = simulate.at("scenarios");
            if (!scen.is_array() || scen.empty()) {
                fail("E_SCHEMA", "simulate.scenarios: expected a non-empty array");
            }
            for (std::size_t i = 0; i < scen.size(); ++i) {
                const std::string where = "simulate.scenarios[" + std::to_string(i) + "]";
                ScenarioSpec s;
                s.label = scen[i].value("label", "scenario" + std::to_string(i));
                s.true_mu = require_vector(scen[i], "true_mu", where);
                if (s.true_mu.size() != k) {
                    fail("E_DIM_MISMATCH", where + ".true_mu: expected " + std::to_string(k) +
                                               " entries");
                }
                spec.scenarios.push_back(std::move(s));
            }
        } else if (simulate.contains("true_mu")) {
            ScenarioSpec s;
            s.label = simulate.value("label", "main");
            s.true_mu = require_vector(simulate, "true_mu", "simulate");
            if (s.true_mu.size() != k) {
                fail("E_DIM_MISMATCH", "simulate.true_mu: expected " + std::to_string(k) +
                                           " entries");
            }
            spec.scenarios.push_back(std::move(s));
        }
        spec.replicates = simulate.value("replicates", 0L);
        spec.seed = simulate.value("seed", 0ULL);
    }

    return spec;
}

SpecFile parse_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail("E_IO", "cannot open spec file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec_json(buf.str());
}

}  // namespace dosessr::cli
