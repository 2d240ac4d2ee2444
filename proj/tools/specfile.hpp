#pragma once

// JSON design-spec files: parsing, validation with field-anchored messages
// and machine-readable error codes.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dosessr/design.hpp"
#include "dosessr/simengine.hpp"

namespace dosessr::cli {

// Validation failure with a stable machine-readable code (CLI exit 2).
class SpecError : public DomainError {
public:
    SpecError(std::string code, const std::string& message)
        : DomainError(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct StageSpec {
    std::string label;
    double n1 = 0.0;
    double n2 = 0.0;
    double n_max = 0.0;
    Eigen::VectorXd phi1;
    Eigen::VectorXd phi2;
};

struct MethodEntry {
    std::string name;
    sim::Method method = sim::Method::FQ1;
    Eigen::VectorXd assumed_mu;    // FQ2/FQ3
    Eigen::VectorXd prior_mu0;     // BY2/BY3
    Eigen::VectorXd prior_tau0;
};

struct ScenarioSpec {
    std::string label;
    Eigen::VectorXd true_mu;
};

struct SpecFile {
    Eigen::VectorXd doses;
    double sigma = 1.0;
    std::vector<StageSpec> stages;
    double alpha = 0.1;
    std::vector<design::ShapeModel> shapes;          // contrasts from shapes ...
    std::optional<Eigen::MatrixXd> contrast_matrix;  // ... or given explicitly
    double cp_min = 0.3;
    double target_power = 0.8;
    std::vector<MethodEntry> methods;
    std::vector<ScenarioSpec> scenarios;
    long replicates = 0;
    std::uint64_t seed = 0;

    int arms() const noexcept { return static_cast<int>(doses.size()); }

    design::ContrastSet build_contrasts() const;
    design::TwoStageDesign build_design(const StageSpec& stage) const;
    const StageSpec& stage_by_label(const std::string& label) const;  // empty -> first
    const MethodEntry& method_by_name(const std::string& name) const; // empty -> first
    sim::MethodSpec build_method(const MethodEntry& entry) const;
};

SpecFile parse_spec_file(const std::string& path);
SpecFile parse_spec_json(const std::string& text);

}  // namespace dosessr::cli
