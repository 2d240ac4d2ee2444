#include "dosessr/design.hpp"

#include <cmath>

namespace dosessr::design {

using gaussian::MvnSpec;
using gaussian::QmcConfig;

Allocation::Allocation(Eigen::VectorXd phi) : phi_(std::move(phi)) {
    if (phi_.size() < 1 || !phi_.allFinite()) {
        throw DomainError("Allocation: invalid allocation vector");
    }
    if ((phi_.array() <= 0.0).any()) {
        throw DomainError("Allocation: all entries must be strictly positive");
    }
    if (std::abs(phi_.sum() - 1.0) > 1e-12) {
        throw DomainError("Allocation: entries must sum to one");
    }
}

Allocation Allocation::equal(int k) {
    Eigen::VectorXd phi = Eigen::VectorXd::Constant(k, 1.0 / k);
    phi[k - 1] = 1.0 - phi.head(k - 1).sum();
    return Allocation(phi);
}

ContrastSet::ContrastSet(Eigen::MatrixXd rows) : c_(std::move(rows)) {
    if (c_.rows() < 1 || c_.cols() < 1 || !c_.allFinite()) {
        throw DomainError("ContrastSet: invalid contrast matrix");
    }
    for (int r = 0; r < c_.rows(); ++r) {
        if (std::abs(c_.row(r).sum()) > 1e-10) {
            throw DomainError("ContrastSet: contrast rows must sum to zero");
        }
        if (std::abs(c_.row(r).norm() - 1.0) > 1e-10) {
            throw DomainError("ContrastSet: contrast rows must have unit norm");
        }
    }
}

ShapeModel ShapeModel::linear() { return {}; }

ShapeModel ShapeModel::emax(double ed50) {
    ShapeModel m;
    m.kind = Kind::emax;
    m.ed50 = ed50;
    return m;
}

ShapeModel ShapeModel::exponential(double delta) {
    ShapeModel m;
    m.kind = Kind::exponential;
    m.delta = delta;
    return m;
}

ShapeModel ShapeModel::sigmoid_emax(double ed50, double h) {
    ShapeModel m;
    m.kind = Kind::sigmoid_emax;
    m.ed50 = ed50;
    m.h = h;
    return m;
}

ShapeModel ShapeModel::custom(Eigen::VectorXd means) {
    ShapeModel m;
    m.kind = Kind::custom;
    m.custom_means = std::move(means);
    return m;
}

namespace {

void check_doses(const Eigen::VectorXd& doses) {
    if (doses.size() < 3) {
        throw DomainError("doses: at least three arms are required");
    }
    if (!doses.allFinite()) {
        throw DomainError("doses: entries must be finite");
    }
    for (int i = 1; i < doses.size(); ++i) {
        if (!(doses[i] > doses[i - 1])) {
            throw DomainError("doses: must be strictly increasing");
        }
    }
}

}  // namespace

DoseResponseProfile shape_profile(const ShapeModel& model, const Eigen::VectorXd& doses) {
    check_doses(doses);
    const auto k = doses.size();
    Eigen::VectorXd means(k);
    std::string label;
    switch (model.kind) {
        case ShapeModel::Kind::linear:
            means = doses;
            label = "linear";
            break;
        case ShapeModel::Kind::emax:
            if (!(model.ed50 > 0.0)) throw DomainError("emax: ed50 must be positive");
            means = doses.array() / (model.ed50 + doses.array());
            label = "emax";
            break;
        case ShapeModel::Kind::exponential:
            if (!(model.delta > 0.0)) throw DomainError("exponential: delta must be positive");
            means = (doses.array() / model.delta).exp() - 1.0;
            label = "exponential";
            break;
        case ShapeModel::Kind::sigmoid_emax: {
            if (!(model.ed50 > 0.0) || !(model.h > 0.0)) {
                throw DomainError("sigmoid_emax: ed50 and h must be positive");
            }
            const auto dh = doses.array().pow(model.h);
            means = dh / (std::pow(model.ed50, model.h) + dh);
            label = "sigmoid_emax";
            break;
        }
        case ShapeModel::Kind::custom:
            if (model.custom_means.size() != k) {
                throw DomainError("custom shape: mean vector length must match doses");
            }
            means = model.custom_means;
            label = "custom";
            break;
    }
    return {doses, means, label};
}

Eigen::VectorXd optimal_contrast(const DoseResponseProfile& mu0, const Allocation& phi) {
    if (mu0.means.size() != phi.arms()) {
        throw DomainError("optimal_contrast: profile and allocation lengths disagree");
    }
    const Eigen::VectorXd& w = phi.weights();
    const double mbar = w.dot(mu0.means);
    Eigen::VectorXd c = w.array() * (mu0.means.array() - mbar);
    const double norm = c.norm();
    if (norm <= 1e-12 * std::max(1.0, mu0.means.cwiseAbs().maxCoeff())) {
        throw DomainError("optimal_contrast: profile is constant across arms");
    }
    c /= norm;
    if (c.dot(mu0.means) < 0.0) c = -c;
    return c;
}

ContrastSet optimal_contrasts(const std::vector<ShapeModel>& models,
                              const Eigen::VectorXd& doses, const Allocation& phi) {
    if (models.empty()) {
        throw DomainError("optimal_contrasts: at least one shape is required");
    }
    Eigen::MatrixXd rows(static_cast<int>(models.size()), doses.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        rows.row(static_cast<int>(i)) = optimal_contrast(shape_profile(models[i], doses), phi);
    }
    return ContrastSet(rows);
}

double stage_weight(const Eigen::VectorXd& c, double n, const Allocation& phi) {
    if (c.size() != phi.arms()) {
        throw DomainError("stage_weight: contrast and allocation lengths disagree");
    }
    if (n < 0.0) {
        throw DomainError("stage_weight: sample size must be nonnegative");
    }
    return n * (c.array().square() / phi.weights().array()).sum();
}

TwoStageDesign::TwoStageDesign(Eigen::VectorXd doses_, double sigma_, Allocation alloc1_,
                               Allocation alloc2_, double n1_, double n2_, ContrastSet contrasts_,
                               double alpha_, double beta_, double n_max_, double cp_min_)
    : doses(std::move(doses_)),
      sigma(sigma_),
      alloc1(std::move(alloc1_)),
      alloc2(std::move(alloc2_)),
      n1(n1_),
      n2(n2_),
      contrasts(std::move(contrasts_)),
      alpha(alpha_),
      beta(beta_),
      n_max(n_max_),
      cp_min(cp_min_) {
    check_doses(doses);
    const int k = arms();
    if (alloc1.arms() != k || alloc2.arms() != k || contrasts.arms() != k) {
        throw DomainError("TwoStageDesign: allocation/contrast lengths must match doses");
    }
    if (!(sigma > 0.0)) throw DomainError("TwoStageDesign: sigma must be positive");
    if (!(n1 > 0.0) || !(n2 > 0.0)) {
        throw DomainError("TwoStageDesign: stage sample sizes must be positive");
    }
    if (n_max < n2) {
        throw DomainError("TwoStageDesign: n_max must be at least n2 (no decrease)");
    }
    if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("TwoStageDesign: alpha must lie in (0, 0.5)");
    if (!(beta > 0.0 && beta < 0.5)) throw DomainError("TwoStageDesign: beta must lie in (0, 0.5)");
    if (!(cp_min > 0.0 && cp_min < 1.0 - beta)) {
        throw DomainError("TwoStageDesign: cp_min must lie in (0, 1 - beta)");
    }
}

double TwoStageDesign::z_alpha() const { return gaussian::norm_quantile(1.0 - alpha); }

double TwoStageDesign::contrast_information(int row, const Allocation& alloc) const {
    const Eigen::VectorXd c = contrasts.row(row);
    return (c.array().square() / alloc.weights().array()).sum();
}

double TwoStageDesign::w1(int row) const { return n1 * contrast_information(row, alloc1); }

double TwoStageDesign::w2(int row) const { return n2 * contrast_information(row, alloc2); }

double round_sample_size(double n, int arms, Rounding rounding) {
    if (rounding == Rounding::none) return n;
    const double block = 2.0 * arms;
    return block * std::ceil(n / block - 1e-9);
}

double single_power(double delta, const Eigen::VectorXd& c, const Allocation& phi, double sigma,
                    double n, double alpha) {
    if (!(n > 0.0)) throw DomainError("single_power: N must be positive");
    if (!(sigma > 0.0)) throw DomainError("single_power: sigma must be positive");
    const double s = (c.array().square() / phi.weights().array()).sum();
    const double drift = delta * std::sqrt(n) / (sigma * std::sqrt(s));
    return gaussian::norm_cdf(drift - gaussian::norm_quantile(1.0 - alpha));
}

double single_sample_size(double delta, const Eigen::VectorXd& c, const Allocation& phi,
                          double sigma, double alpha, double beta, Rounding rounding) {
    if (!(delta > 0.0)) {
        throw DomainError("single_sample_size: effect must be positive");
    }
    const double s = (c.array().square() / phi.weights().array()).sum();
    const double z = gaussian::norm_quantile(1.0 - alpha) + gaussian::norm_quantile(1.0 - beta);
    const double n = s * sigma * sigma * z * z / (delta * delta);
    return round_sample_size(n, phi.arms(), rounding);
}

Eigen::MatrixXd combined_null_correlation(const TwoStageDesign& design) {
    const Eigen::MatrixXd& c = design.contrasts.matrix();
    const Eigen::MatrixXd g1 =
        c * design.alloc1.weights().cwiseInverse().asDiagonal() * c.transpose();
    const Eigen::MatrixXd g2 =
        c * design.alloc2.weights().cwiseInverse().asDiagonal() * c.transpose();
    const Eigen::MatrixXd raw = design.n1 * g1 + design.n2 * g2;
    const int m = design.n_contrasts();
    Eigen::VectorXd d(m);
    for (int r = 0; r < m; ++r) d[r] = 1.0 / std::sqrt(design.w1(r) + design.w2(r));
    return d.asDiagonal() * raw * d.asDiagonal();
}

double mcp_critical_value(const TwoStageDesign& design, const QmcConfig& cfg) {
    const int m = design.n_contrasts();
    if (m == 1) return design.z_alpha();
    MvnSpec spec(Eigen::VectorXd::Zero(m), combined_null_correlation(design));
    return gaussian::mvn_equicoordinate_quantile(spec, 1.0 - design.alpha, cfg);
}

double mcp_power(const Eigen::VectorXd& mu, const TwoStageDesign& design, double u_alpha,
                 double n, const QmcConfig& cfg) {
    if (!(n > 0.0)) throw DomainError("mcp_power: N must be positive");
    if (mu.size() != design.arms()) {
        throw DomainError("mcp_power: profile length must match design arms");
    }
    const Eigen::MatrixXd& c = design.contrasts.matrix();
    const int m = design.n_contrasts();
    // One-stage test at total size n under the stage-2 allocation: the
    // correlation is invariant to n, only the drift scales with sqrt(n).
    Eigen::VectorXd info(m);
    for (int r = 0; r < m; ++r) info[r] = design.contrast_information(r, design.alloc2);
    const Eigen::VectorXd delta = c * mu;
    const Eigen::VectorXd mean =
        std::sqrt(n) / design.sigma * delta.array().cwiseQuotient(info.array().sqrt()).matrix();
    const Eigen::MatrixXd g =
        c * design.alloc2.weights().cwiseInverse().asDiagonal() * c.transpose();
    const Eigen::VectorXd d = info.array().rsqrt();
    const Eigen::MatrixXd corr = d.asDiagonal() * g * d.asDiagonal();
    const auto est = gaussian::mvn_equicoordinate_cdf(MvnSpec(mean, corr), u_alpha, cfg);
    return 1.0 - est.value;
}

double mcp_sample_size(const Eigen::VectorXd& mu, const TwoStageDesign& design, double u_alpha,
                       double beta, Rounding rounding, const QmcConfig& cfg) {
    const Eigen::VectorXd delta = design.contrasts.matrix() * mu;
    if ((delta.array() <= 0.0).all()) {
        throw DomainError("mcp_sample_size: no contrast has positive effect under mu");
    }
    const double target = 1.0 - beta;
    double lo = 1.0;
    double hi = 2.0;
    while (mcp_power(mu, design, u_alpha, hi, cfg) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e9) {
            throw ConvergenceError("mcp_sample_size: target power unreachable");
        }
    }
    while (hi - lo > 0.5) {
        const double mid = 0.5 * (lo + hi);
        if (mcp_power(mu, design, u_alpha, mid, cfg) >= target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return round_sample_size(hi, design.arms(), rounding);
}

}  // namespace dosessr::design
