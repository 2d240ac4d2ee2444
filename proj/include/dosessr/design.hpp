#pragma once

// Dose-response shapes, optimal contrasts and fixed-design power/sample-size
// calculations for single and multiple contrast trend tests.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dosessr/errors.hpp"
#include "dosessr/gaussian.hpp"

namespace dosessr::design {

struct DoseResponseProfile {
    Eigen::VectorXd doses;   // strictly increasing, k >= 3
    Eigen::VectorXd means;
    std::string label;
};

// Strictly positive, sum-to-one sample allocation.
class Allocation {
public:
    explicit Allocation(Eigen::VectorXd phi);

    const Eigen::VectorXd& weights() const noexcept { return phi_; }
    int arms() const noexcept { return static_cast<int>(phi_.size()); }
    double operator[](int i) const { return phi_[i]; }

    static Allocation equal(int k);

private:
    Eigen::VectorXd phi_;
};

// One contrast per row; every row zero-sum (1e-10) and unit-norm (1e-10).
class ContrastSet {
public:
    explicit ContrastSet(Eigen::MatrixXd rows);

    const Eigen::MatrixXd& matrix() const noexcept { return c_; }
    int count() const noexcept { return static_cast<int>(c_.rows()); }
    int arms() const noexcept { return static_cast<int>(c_.cols()); }
    Eigen::VectorXd row(int r) const { return c_.row(r); }

private:
    Eigen::MatrixXd c_;
};

struct ShapeModel {
    enum class Kind { linear, emax, exponential, sigmoid_emax, custom };

    Kind kind = Kind::linear;
    double ed50 = 0.0;      // emax / sigmoid_emax
    double delta = 0.0;     // exponential
    double h = 0.0;         // sigmoid_emax Hill coefficient
    Eigen::VectorXd custom_means;

    static ShapeModel linear();
    static ShapeModel emax(double ed50);
    static ShapeModel exponential(double delta);
    static ShapeModel sigmoid_emax(double ed50, double h);
    static ShapeModel custom(Eigen::VectorXd means);
};

// Standardized mean profile of a candidate model over the dose grid. Optimal
// contrasts are invariant to affine rescaling, so no further normalization
// is applied.
DoseResponseProfile shape_profile(const ShapeModel& model, const Eigen::VectorXd& doses);

// Most powerful contrast for an assumed profile: c_i proportional to
// phi_i * (mu0_i - weighted mean), unit norm, oriented so c . mu0 > 0.
// A constant profile has no test direction and raises DomainError.
Eigen::VectorXd optimal_contrast(const DoseResponseProfile& mu0, const Allocation& phi);

ContrastSet optimal_contrasts(const std::vector<ShapeModel>& models,
                              const Eigen::VectorXd& doses, const Allocation& phi);

// Combination weight of one stage: n * sum_i c_i^2 / phi_i.
double stage_weight(const Eigen::VectorXd& c, double n, const Allocation& phi);

struct TwoStageDesign {
    Eigen::VectorXd doses;
    double sigma = 1.0;
    Allocation alloc1;
    Allocation alloc2;
    double n1 = 0.0;
    double n2 = 0.0;
    ContrastSet contrasts;
    double alpha = 0.1;
    double beta = 0.2;
    double n_max = 0.0;     // stage-2 cap; never below n2
    double cp_min = 0.3;    // promising-zone lower bound (CP or PP rule)

    TwoStageDesign(Eigen::VectorXd doses, double sigma, Allocation alloc1, Allocation alloc2,
                   double n1, double n2, ContrastSet contrasts, double alpha, double beta,
                   double n_max, double cp_min);

    int arms() const noexcept { return static_cast<int>(doses.size()); }
    int n_contrasts() const noexcept { return contrasts.count(); }
    double z_alpha() const;

    // sum_i C_ri^2 / phi_i for the requested stage allocation.
    double contrast_information(int row, const Allocation& alloc) const;
    double w1(int row) const;   // n1 * contrast_information(row, alloc1)
    double w2(int row) const;   // n2 * contrast_information(row, alloc2)
};

enum class Rounding { none, per_arm_equal };

// Round a continuous total up to complete balanced blocks (two subjects per
// arm per block), keeping every arm at the same integer count.
double round_sample_size(double n, int arms, Rounding rounding);

// Power of the one-stage contrast test: Phi(delta sqrt(N) / (sigma sqrt(S)) - z_alpha).
double single_power(double delta, const Eigen::VectorXd& c, const Allocation& phi, double sigma,
                    double n, double alpha);

// Smallest N with single_power >= 1 - beta, optionally rounded.
double single_sample_size(double delta, const Eigen::VectorXd& c, const Allocation& phi,
                          double sigma, double alpha, double beta,
                          Rounding rounding = Rounding::none);

// Null covariance (correlation) of the two-stage combined contrast vector.
Eigen::MatrixXd combined_null_correlation(const TwoStageDesign& design);

// Familywise critical value: equicoordinate 1-alpha quantile of the combined
// vector under the null.
double mcp_critical_value(const TwoStageDesign& design, const gaussian::QmcConfig& cfg = {});

// Power of the one-stage multiple contrast test at total size N against u_alpha.
double mcp_power(const Eigen::VectorXd& mu, const TwoStageDesign& design, double u_alpha,
                 double n, const gaussian::QmcConfig& cfg = {});

// Smallest N with mcp_power >= 1 - beta (monotone bracket + bisection).
double mcp_sample_size(const Eigen::VectorXd& mu, const TwoStageDesign& design, double u_alpha,
                       double beta, Rounding rounding = Rounding::none,
                       const gaussian::QmcConfig& cfg = {});

}  // namespace dosessr::design
