#pragma once

// Stage statistics, pre-weighted combination tests, conditional power and the
// promising-zone sample size re-estimation rule.
//
// Combination weights always come from the pre-declared design (n1, n2), never
// from a re-estimated stage-2 size; that is what keeps the type I error exact
// under data-dependent adaptation.

#include <optional>

#include <Eigen/Dense>

#include "dosessr/design.hpp"
#include "dosessr/gaussian.hpp"

namespace dosessr::freq {

using design::Allocation;
using design::ContrastSet;
using design::TwoStageDesign;

// Standardized contrast statistic sum(c_i ybar_i) / (sigma sqrt(S / n)).
double stage_statistic(const Eigen::VectorXd& ybar, double n, const Allocation& phi,
                       const Eigen::VectorXd& c, double sigma);

// Stage-1 sufficient statistics plus the derived contrast statistics.
class InterimState {
public:
    // Computes t1 from the observed means.
    static InterimState from_means(Eigen::VectorXd ybar1, double n1, Allocation phi1,
                                   const ContrastSet& contrasts, double sigma);

    // Validates that the supplied t1 is consistent with ybar1 (1e-10).
    InterimState(Eigen::VectorXd ybar1, double n1, Allocation phi1, Eigen::VectorXd t1,
                 const ContrastSet& contrasts, double sigma);

    const Eigen::VectorXd& ybar1() const noexcept { return ybar1_; }
    double n1() const noexcept { return n1_; }
    const Allocation& phi1() const noexcept { return phi1_; }
    const Eigen::VectorXd& t1() const noexcept { return t1_; }

private:
    Eigen::VectorXd ybar1_;
    double n1_;
    Allocation phi1_;
    Eigen::VectorXd t1_;
};

enum class Zone { unfavorable, favorable, promising };

const char* zone_name(Zone z) noexcept;

struct SsrDecision {
    Zone zone = Zone::unfavorable;
    double n2_new = 0.0;                     // continuous; rounding is the caller's job
    double metric_at_n2 = 0.0;               // CP(N2) or PP(N2)
    std::optional<double> metric_at_zero;    // PP(0), Bayesian rule only
};

// Inverse-normal combination (sqrt(w1) t1 + sqrt(w2) t2) / sqrt(w1 + w2).
double combine(double t1, double t2, double w1, double w2);

// Componentwise combination with diagonal weight matrices.
Eigen::VectorXd combine_multi(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2,
                              const Eigen::VectorXd& w1_diag, const Eigen::VectorXd& w2_diag);

// CP(n2, delta | stage 1) for the single-contrast design.
double conditional_power_single(double n2, double delta, const InterimState& interim,
                                const TwoStageDesign& design);

// Conditional mean and covariance of the combined vector given stage-1 data;
// the covariance does not depend on n2 or delta.
struct ConditionalLaw {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};
ConditionalLaw conditional_law_multi(double n2, const Eigen::VectorXd& delta_vec,
                                     const InterimState& interim, const TwoStageDesign& design);

// CP(n2, delta_vec | stage 1) = 1 - Psi(u_alpha) for the multi-contrast design.
double conditional_power_multi(double n2, const Eigen::VectorXd& delta_vec,
                               const InterimState& interim, const TwoStageDesign& design,
                               double u_alpha, const gaussian::QmcConfig& cfg = {});

// Where the effect size assumed by the CP calculation comes from: the interim
// estimate C ybar1, or a fixed pre-specified effect.
struct DeltaSource {
    enum class Kind { observed, fixed };
    Kind kind = Kind::observed;
    Eigen::VectorXd fixed_delta;   // length m when kind == fixed

    static DeltaSource observed();
    static DeltaSource fixed(Eigen::VectorXd delta_vec);
    static DeltaSource fixed_scalar(double delta);
};

// Three-zone promising-zone decision for the single-contrast design.
SsrDecision cp_ssr_decide(const InterimState& interim, const TwoStageDesign& design,
                          const DeltaSource& source);

// Multi-contrast variant; the critical value is the familywise u_alpha.
SsrDecision cp_ssr_decide(const InterimState& interim, const TwoStageDesign& design,
                          const DeltaSource& source, double u_alpha,
                          const gaussian::QmcConfig& cfg = {});

// Strict comparison against the pre-declared critical value.
bool final_test(double t_combined, double critical) noexcept;
bool final_test(const Eigen::VectorXd& t_combined, double critical) noexcept;

}  // namespace dosessr::freq
