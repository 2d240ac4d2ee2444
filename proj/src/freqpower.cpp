#include "dosessr/freqpower.hpp"

#include <cmath>

namespace dosessr::freq {

using gaussian::MvnSpec;
using gaussian::QmcConfig;

double stage_statistic(const Eigen::VectorXd& ybar, double n, const Allocation& phi,
                       const Eigen::VectorXd& c, double sigma) {
    if (!(n > 0.0)) throw DomainError("stage_statistic: n must be positive");
    if (!(sigma > 0.0)) throw DomainError("stage_statistic: sigma must be positive");
    if (ybar.size() != phi.arms() || c.size() != phi.arms()) {
        throw DomainError("stage_statistic: vector lengths disagree");
    }
    const double s = (c.array().square() / phi.weights().array()).sum();
    return c.dot(ybar) / (sigma * std::sqrt(s / n));
}

namespace {

Eigen::VectorXd all_stage_statistics(const Eigen::VectorXd& ybar, double n,
                                     const Allocation& phi, const ContrastSet& contrasts,
                                     double sigma) {
    Eigen::VectorXd t(contrasts.count());
    for (int r = 0; r < contrasts.count(); ++r) {
        t[r] = stage_statistic(ybar, n, phi, contrasts.row(r), sigma);
    }
    return t;
}

}  // namespace

InterimState InterimState::from_means(Eigen::VectorXd ybar1, double n1, Allocation phi1,
                                      const ContrastSet& contrasts, double sigma) {
    Eigen::VectorXd t1 = all_stage_statistics(ybar1, n1, phi1, contrasts, sigma);
    return InterimState(std::move(ybar1), n1, std::move(phi1), std::move(t1), contrasts, sigma);
}

InterimState::InterimState(Eigen::VectorXd ybar1, double n1, Allocation phi1, Eigen::VectorXd t1,
                           const ContrastSet& contrasts, double sigma)
    : ybar1_(std::move(ybar1)), n1_(n1), phi1_(std::move(phi1)), t1_(std::move(t1)) {
    if (!(n1_ > 0.0)) throw DomainError("InterimState: n1 must be positive");
    if (ybar1_.size() != phi1_.arms()) {
        throw DomainError("InterimState: means and allocation lengths disagree");
    }
    const Eigen::VectorXd expected = all_stage_statistics(ybar1_, n1_, phi1_, contrasts, sigma);
    if (t1_.size() != expected.size() || (t1_ - expected).cwiseAbs().maxCoeff() > 1e-10) {
        throw DomainError("InterimState: t1 is inconsistent with the stage-1 means");
    }
}

const char* zone_name(Zone z) noexcept {
    switch (z) {
        case Zone::unfavorable: return "unfavorable";
        case Zone::favorable: return "favorable";
        case Zone::promising: return "promising";
    }
    return "?";
}

double combine(double t1, double t2, double w1, double w2) {
    if (!(w1 > 0.0) || !(w2 > 0.0)) {
        throw DomainError("combine: weights must be positive");
    }
    return (std::sqrt(w1) * t1 + std::sqrt(w2) * t2) / std::sqrt(w1 + w2);
}

Eigen::VectorXd combine_multi(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2,
                              const Eigen::VectorXd& w1_diag, const Eigen::VectorXd& w2_diag) {
    const auto m = t1.size();
    if (t2.size() != m || w1_diag.size() != m || w2_diag.size() != m) {
        throw DomainError("combine_multi: vector lengths disagree");
    }
    Eigen::VectorXd out(m);
    for (int r = 0; r < m; ++r) {
        out[r] = combine(t1[r], t2[r], w1_diag[r], w2_diag[r]);
    }
    return out;
}

namespace {

// (z_alpha sqrt(w1 + w2) - sqrt(w1) T1) / sqrt(w2): the stage-2 hurdle the
// combined test leaves after observing T1.
double conditional_penalty(double t1, double w1, double w2, double z_alpha) {
    return (z_alpha * std::sqrt(w1 + w2) - std::sqrt(w1) * t1) / std::sqrt(w2);
}

}  // namespace

double conditional_power_single(double n2, double delta, const InterimState& interim,
                                const TwoStageDesign& design) {
    if (!(n2 > 0.0)) throw DomainError("conditional_power_single: n2 must be positive");
    const double s2 = design.contrast_information(0, design.alloc2);
    const double drift = delta * std::sqrt(n2) / (design.sigma * std::sqrt(s2));
    const double pen =
        conditional_penalty(interim.t1()[0], design.w1(0), design.w2(0), design.z_alpha());
    return gaussian::norm_cdf(drift - pen);
}

ConditionalLaw conditional_law_multi(double n2, const Eigen::VectorXd& delta_vec,
                                     const InterimState& interim, const TwoStageDesign& design) {
    if (!(n2 > 0.0)) throw DomainError("conditional_law_multi: n2 must be positive");
    const int m = design.n_contrasts();
    if (delta_vec.size() != m) {
        throw DomainError("conditional_law_multi: delta vector length disagrees");
    }
    Eigen::VectorXd w1(m), w2(m), info2(m);
    for (int r = 0; r < m; ++r) {
        w1[r] = design.w1(r);
        w2[r] = design.w2(r);
        info2[r] = design.contrast_information(r, design.alloc2);
    }
    const Eigen::VectorXd wsum_sqrt = (w1 + w2).array().sqrt();

    // Mean: (W1 + W2)^{-1/2} (W1^{1/2} T1 + (n2/sigma) W2^{1/2} W~2(n2)^{-1/2} delta),
    // where the stage-2 term reduces to sqrt(n2) delta_r / (sigma sqrt(info2_r)).
    Eigen::VectorXd mean(m);
    for (int r = 0; r < m; ++r) {
        const double stage2_mean = delta_vec[r] * std::sqrt(n2) / (design.sigma * std::sqrt(info2[r]));
        mean[r] = (std::sqrt(w1[r]) * interim.t1()[r] + std::sqrt(w2[r]) * stage2_mean) / wsum_sqrt[r];
    }

    // Covariance: correlation of C diag(1/phi2) C^T, scaled by
    // sqrt(w2_r w2_s) / sqrt((w1_r + w2_r)(w1_s + w2_s)); free of n2 and delta.
    const Eigen::MatrixXd& c = design.contrasts.matrix();
    const Eigen::MatrixXd g =
        c * design.alloc2.weights().cwiseInverse().asDiagonal() * c.transpose();
    Eigen::MatrixXd cov(m, m);
    for (int r = 0; r < m; ++r) {
        for (int s = 0; s < m; ++s) {
            const double corr = g(r, s) / std::sqrt(info2[r] * info2[s]);
            cov(r, s) = corr * std::sqrt(w2[r] * w2[s]) / (wsum_sqrt[r] * wsum_sqrt[s]);
        }
    }
    return {std::move(mean), std::move(cov)};
}

double conditional_power_multi(double n2, const Eigen::VectorXd& delta_vec,
                               const InterimState& interim, const TwoStageDesign& design,
                               double u_alpha, const QmcConfig& cfg) {
    ConditionalLaw law = conditional_law_multi(n2, delta_vec, interim, design);
    // The conditional covariance must not depend on n2; verify against a
    // second assembly before integrating (cheap next to the QMC work).
    const ConditionalLaw probe = conditional_law_multi(2.0 * n2, delta_vec, interim, design);
    if ((probe.cov - law.cov).cwiseAbs().maxCoeff() > 1e-10) {
        throw NumericError("conditional_power_multi: covariance drifted with n2");
    }
    const auto est = gaussian::mvn_equicoordinate_cdf(MvnSpec(std::move(law.mean), std::move(law.cov)),
                                                      u_alpha, cfg);
    return 1.0 - est.value;
}

DeltaSource DeltaSource::observed() { return {}; }

DeltaSource DeltaSource::fixed(Eigen::VectorXd delta_vec) {
    DeltaSource s;
    s.kind = Kind::fixed;
    s.fixed_delta = std::move(delta_vec);
    return s;
}

DeltaSource DeltaSource::fixed_scalar(double delta) {
    return fixed(Eigen::VectorXd::Constant(1, delta));
}

namespace {

Eigen::VectorXd resolve_delta(const DeltaSource& source, const InterimState& interim,
                              const TwoStageDesign& design) {
    if (source.kind == DeltaSource::Kind::observed) {
        return design.contrasts.matrix() * interim.ybar1();
    }
    if (source.fixed_delta.size() != design.n_contrasts()) {
        throw DomainError("DeltaSource: fixed delta length must match the contrast count");
    }
    return source.fixed_delta;
}

}  // namespace

SsrDecision cp_ssr_decide(const InterimState& interim, const TwoStageDesign& design,
                          const DeltaSource& source) {
    if (design.n_contrasts() != 1) {
        throw DomainError("cp_ssr_decide: single-contrast overload needs exactly one contrast");
    }
    const double delta = resolve_delta(source, interim, design)[0];
    const double cp_n2 = conditional_power_single(design.n2, delta, interim, design);

    SsrDecision out;
    out.metric_at_n2 = cp_n2;
    if (cp_n2 < design.cp_min || delta < 0.0) {
        out.zone = Zone::unfavorable;
        out.n2_new = design.n2;
        return out;
    }
    if (cp_n2 >= 1.0 - design.beta) {
        out.zone = Zone::favorable;
        out.n2_new = design.n2;
        return out;
    }
    out.zone = Zone::promising;
    const double pen =
        conditional_penalty(interim.t1()[0], design.w1(0), design.w2(0), design.z_alpha());
    const double s2 = design.contrast_information(0, design.alloc2);
    double solved = design.n_max;
    if (delta > 0.0) {
        const double root = gaussian::norm_quantile(1.0 - design.beta) + pen;
        solved = (root > 0.0)
                     ? s2 * design.sigma * design.sigma / (delta * delta) * root * root
                     : design.n2;
    }
    out.n2_new = std::min(std::max(solved, design.n2), design.n_max);
    return out;
}

SsrDecision cp_ssr_decide(const InterimState& interim, const TwoStageDesign& design,
                          const DeltaSource& source, double u_alpha, const QmcConfig& cfg) {
    if (design.n_contrasts() == 1) {
        return cp_ssr_decide(interim, design, source);
    }
    const Eigen::VectorXd delta = resolve_delta(source, interim, design);
    const double cp_n2 = conditional_power_multi(design.n2, delta, interim, design, u_alpha, cfg);

    SsrDecision out;
    out.metric_at_n2 = cp_n2;
    if (cp_n2 < design.cp_min || delta.maxCoeff() <= 0.0) {
        out.zone = Zone::unfavorable;
        out.n2_new = design.n2;
        return out;
    }
    if (cp_n2 >= 1.0 - design.beta) {
        out.zone = Zone::favorable;
        out.n2_new = design.n2;
        return out;
    }
    out.zone = Zone::promising;
    const double target = 1.0 - design.beta;
    if (conditional_power_multi(design.n_max, delta, interim, design, u_alpha, cfg) < target) {
        out.n2_new = design.n_max;
        return out;
    }
    double lo = design.n2;
    double hi = design.n_max;
    while (hi - lo > 0.05) {
        const double mid = 0.5 * (lo + hi);
        if (conditional_power_multi(mid, delta, interim, design, u_alpha, cfg) >= target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    out.n2_new = hi;
    return out;
}

bool final_test(double t_combined, double critical) noexcept { return t_combined > critical; }

bool final_test(const Eigen::VectorXd& t_combined, double critical) noexcept {
    return t_combined.maxCoeff() > critical;
}

}  // namespace dosessr::freq
