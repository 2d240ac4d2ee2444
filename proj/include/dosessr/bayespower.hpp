#pragma once

// Posterior and posterior-predictive machinery over the arm-mean vector:
// flat, independent conjugate-normal, and general priors (via Laplace
// approximation or caller-supplied posterior draws), the closed-form
// predictive power, and the PP-based re-estimation rule.

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dosessr/design.hpp"
#include "dosessr/freqpower.hpp"
#include "dosessr/gaussian.hpp"

namespace dosessr::bayes {

using design::TwoStageDesign;
using freq::InterimState;
using freq::SsrDecision;
using freq::Zone;

struct Prior {
    enum class Kind { flat, conjugate, general };

    Kind kind = Kind::flat;
    Eigen::VectorXd mu0;     // conjugate prior means
    Eigen::VectorXd tau0;    // conjugate prior precisions, strictly positive
    std::function<double(const Eigen::VectorXd&)> log_density;   // general prior

    static Prior flat();
    static Prior conjugate_normal(Eigen::VectorXd mu0, Eigen::VectorXd tau0);
    static Prior general(std::function<double(const Eigen::VectorXd&)> log_density);
};

struct PosteriorNormal {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;    // diagonal for flat/conjugate, full for Laplace
};

// Posterior of the arm means given stage-1 data. Flat and conjugate cases
// are exact; a general prior goes through a Laplace approximation (mode by
// quasi-Newton from ybar1, Hessian by central differences).
PosteriorNormal posterior(const Prior& prior, const InterimState& interim, double sigma);

// Closed-form PP(n2 | stage 1) = Phi[(a* - z_alpha) / sqrt(b*)] for one contrast.
double pp_closed_form_single(const PosteriorNormal& post, double n2, const InterimState& interim,
                             const TwoStageDesign& design);

// Multi-contrast closed form: 1 - Psi(u_alpha) under the predictive law of the
// combined vector. Accepts a full posterior covariance (Laplace).
double pp_closed_form_multi(const PosteriorNormal& post, double n2, const InterimState& interim,
                            const TwoStageDesign& design, double u_alpha,
                            const gaussian::QmcConfig& cfg = {});

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// PP as the average of conditional power over posterior draws of the arm
// means. Sampler-agnostic: the caller supplies (approximately) independent
// draws; the estimate is a deterministic function of the sample sequence.
McEstimate pp_monte_carlo(const std::vector<Eigen::VectorXd>& posterior_samples, double n2,
                          const InterimState& interim, const TwoStageDesign& design,
                          double critical, const gaussian::QmcConfig& cfg = {});

// Analytic n2 -> 0+ limit of the closed-form PP: how powerful stage 1 already
// is on its own.
double pp_at_zero(const PosteriorNormal& post, const InterimState& interim,
                  const TwoStageDesign& design, double critical,
                  const gaussian::QmcConfig& cfg = {});

// PP-based three-zone rule. Promising zone scans n2 = 1, 2, ..., n_max for
// the first crossing of the target power (PP need not be monotone), then
// applies the no-decrease floor and the n_max cap.
SsrDecision pp_ssr_decide(const InterimState& interim, const TwoStageDesign& design,
                          const Prior& prior);
SsrDecision pp_ssr_decide(const InterimState& interim, const TwoStageDesign& design,
                          const Prior& prior, double u_alpha, const gaussian::QmcConfig& cfg = {});

}  // namespace dosessr::bayes
