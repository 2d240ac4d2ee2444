#pragma once

// Univariate and multivariate normal probabilities.
//
// The multivariate CDF uses the Genz separation-of-variables transform with a
// greedy variable reordering and randomized quasi-Monte Carlo integration, so
// probabilities and equicoordinate quantiles (multiplicity-adjusted critical
// values) need no external dependency. All estimates are deterministic
// functions of their inputs, including the seed.

#include <cstdint>

#include <Eigen/Dense>

#include "dosessr/errors.hpp"

namespace dosessr::gaussian {

inline constexpr int kMaxDim = 16;

double norm_pdf(double x) noexcept;

// Standard normal CDF. Throws DomainError on non-finite input.
double norm_cdf(double x);

// Standard normal quantile (Wichura's AS 241, full double precision).
// Throws DomainError unless 0 < p < 1.
double norm_quantile(double p);

// Mean/covariance pair. Validates symmetry (1e-12 relative), positive
// semi-definiteness (lambda_min >= -1e-10 * lambda_max) and matching sizes.
class MvnSpec {
public:
    MvnSpec(Eigen::VectorXd mean, Eigen::MatrixXd cov);

    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& cov() const noexcept { return cov_; }
    int dim() const noexcept { return static_cast<int>(mean_.size()); }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
};

struct QmcConfig {
    int sample_budget = 4096;   // QMC points per randomization
    int randomizations = 8;
    std::uint64_t seed = 0x9d0e5eedu;
    double abs_tol = 1e-4;

    void validate() const;
};

struct MvnEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Pr(X_1 <= u_1, ..., X_m <= u_m). Degenerate covariances (zero-variance
// rows, correlation +-1) are handled by pivoted factorization with rank
// detection; deterministic coordinates fold into the integration limits.
MvnEstimate mvn_upper_orthant_cdf(const MvnSpec& spec, const Eigen::VectorXd& upper,
                                  const QmcConfig& cfg = {});

// Pr(max_i X_i <= u).
MvnEstimate mvn_equicoordinate_cdf(const MvnSpec& spec, double u, const QmcConfig& cfg = {});

// Smallest u with Pr(max X <= u) = p for a zero-mean spec, via safeguarded
// root refinement on a frozen-seed CDF estimate. Throws ConvergenceError if
// no bracket exists within +-12 standard deviations.
double mvn_equicoordinate_quantile(const MvnSpec& spec, double p, const QmcConfig& cfg = {});

}  // namespace dosessr::gaussian
