#pragma once

// Seeded trial simulation at the sufficient-statistic level: per-arm means
// are drawn from their exact Gaussian law, one counter-based stream per
// (master seed, replicate, stage), so results are bit-identical regardless
// of the parallel schedule.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dosessr/bayespower.hpp"
#include "dosessr/design.hpp"
#include "dosessr/freqpower.hpp"

namespace dosessr::sim {

using design::TwoStageDesign;
using freq::Zone;

enum class Method { FQ1, FQ2, FQ3, BY1, BY2, BY3 };

const char* method_name(Method m) noexcept;

// FQ2/FQ3 carry the assumed mean profile the fixed effect is computed from;
// BY2/BY3 carry the conjugate prior.
struct MethodSpec {
    Method method = Method::FQ1;
    Eigen::VectorXd assumed_mu;
    Eigen::VectorXd prior_mu0;
    Eigen::VectorXd prior_tau0;

    static MethodSpec fq1();
    static MethodSpec fq2(Eigen::VectorXd assumed_mu);
    static MethodSpec fq3(Eigen::VectorXd assumed_mu);
    static MethodSpec by1();
    static MethodSpec by2(Eigen::VectorXd mu0, Eigen::VectorXd tau0);
    static MethodSpec by3(Eigen::VectorXd mu0, Eigen::VectorXd tau0);

    bool bayesian() const noexcept { return method >= Method::BY1; }
};

struct Scenario {
    TwoStageDesign design;
    Eigen::VectorXd true_mu;
    MethodSpec method;
    int replicates = 0;
    std::uint64_t master_seed = 0;

    void validate() const;
};

struct TrialOutcome {
    Zone zone = Zone::unfavorable;
    double metric_at_n2 = 0.0;
    double final_n2 = 0.0;
    double total_n = 0.0;
    bool rejected = false;
};

struct SimulationReport {
    double pct_unfavorable = 0.0;
    double pct_favorable = 0.0;
    double pct_promising = 0.0;
    double metric_mean = 0.0;
    double metric_sd = 0.0;
    double power = 0.0;
    double mean_ss = 0.0;
    double mean_incr = 0.0;   // mean(final_n2 - n2) over promising replicates
    int replicates = 0;
    double mc_se_power = 0.0;
};

struct MetricDistribution {
    std::vector<double> values;   // per-replicate CP/PP(N2), replicate order
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
};

// One draw of the per-arm means: ybar_i ~ N(mu_i, sigma^2 / (n phi_i)),
// addressed by (seed, replicate, stage, arm).
Eigen::VectorXd draw_stage_means(const Eigen::VectorXd& mu, double sigma, double n,
                                 const design::Allocation& phi, std::uint64_t seed,
                                 std::uint64_t replicate, std::uint32_t stage);

struct StudyResult {
    SimulationReport report;
    MetricDistribution metrics;
};

// Precomputes per-scenario constants (U_alpha, weights, fixed effects) once
// and runs replicates against them.
class ScenarioEngine {
public:
    explicit ScenarioEngine(Scenario scenario);

    TrialOutcome run_trial(int replicate_index) const;
    StudyResult run_full(int threads = 0) const;   // one pass, report + metrics
    SimulationReport run_study(int threads = 0) const;
    MetricDistribution metric_distribution(int threads = 0) const;

    const Scenario& scenario() const noexcept { return scenario_; }
    double u_alpha() const noexcept { return u_alpha_; }

private:
    Scenario scenario_;
    double critical_ = 0.0;       // z_alpha (m = 1) or U_alpha
    double u_alpha_ = 0.0;
    Eigen::VectorXd fixed_delta_; // FQ2/FQ3
    bayes::Prior prior_;          // BY methods
    std::uint64_t qmc_salt_ = 0;

    std::vector<TrialOutcome> run_all(int threads) const;
};

TrialOutcome run_trial(const Scenario& scenario, int replicate_index);
SimulationReport run_study(const Scenario& scenario, int threads = 0);
MetricDistribution metric_distribution(const Scenario& scenario, int threads = 0);

}  // namespace dosessr::sim
