#pragma once

// Shared study designs used across the test suites: a five-arm trial with
// sigma = 2, alpha = 0.10, a linear optimal contrast for the single-contrast
// design and the four-shape candidate set for the multiple-contrast design.

#include <Eigen/Dense>

#include "dosessr/design.hpp"
#include "dosessr/freqpower.hpp"

namespace fixtures {

using dosessr::design::Allocation;
using dosessr::design::ContrastSet;
using dosessr::design::ShapeModel;
using dosessr::design::TwoStageDesign;

inline Eigen::VectorXd doses() {
    Eigen::VectorXd d(5);
    d << 0, 1, 2, 3, 4;
    return d;
}

inline Eigen::VectorXd mu_optimistic() {
    Eigen::VectorXd m(5);
    m << 0, 0.25, 0.5, 0.75, 1.0;
    return m;
}

inline Eigen::VectorXd mu_under() { return 0.8 * mu_optimistic(); }
inline Eigen::VectorXd mu_null() { return Eigen::VectorXd::Zero(5); }
inline Eigen::VectorXd mu_super() { return 1.2 * mu_optimistic(); }

inline ContrastSet linear_contrast() {
    return dosessr::design::optimal_contrasts({ShapeModel::linear()}, doses(),
                                              Allocation::equal(5));
}

inline ContrastSet four_shape_contrasts() {
    return dosessr::design::optimal_contrasts(
        {ShapeModel::linear(), ShapeModel::emax(0.3), ShapeModel::exponential(0.3),
         ShapeModel::sigmoid_emax(1.0, 3.0)},
        doses(), Allocation::equal(5));
}

// Single-contrast designs (N_max = n2 + 80).
inline TwoStageDesign single_design(double n1, double n2) {
    return TwoStageDesign(doses(), 2.0, Allocation::equal(5), Allocation::equal(5), n1, n2,
                          linear_contrast(), 0.10, 0.20, n2 + 80.0, 0.30);
}

inline TwoStageDesign single_early() { return single_design(60, 90); }
inline TwoStageDesign single_late() { return single_design(105, 45); }

// Multiple-contrast designs (N_max = n2 + 95).
inline TwoStageDesign multi_design(double n1, double n2) {
    return TwoStageDesign(doses(), 2.0, Allocation::equal(5), Allocation::equal(5), n1, n2,
                          four_shape_contrasts(), 0.10, 0.20, n2 + 95.0, 0.30);
}

inline TwoStageDesign multi_early() { return multi_design(70, 100); }
inline TwoStageDesign multi_late() { return multi_design(120, 50); }

// Interim state whose single-contrast statistic equals t1 exactly.
inline dosessr::freq::InterimState interim_with_t1(const TwoStageDesign& d, double t1) {
    const Eigen::VectorXd c = d.contrasts.row(0);
    const double s = d.contrast_information(0, d.alloc1);
    const Eigen::VectorXd ybar = (t1 * d.sigma * std::sqrt(s / d.n1)) * c;
    return dosessr::freq::InterimState::from_means(ybar, d.n1, d.alloc1, d.contrasts, d.sigma);
}

}  // namespace fixtures
