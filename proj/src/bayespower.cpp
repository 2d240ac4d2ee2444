#include "dosessr/bayespower.hpp"

#include <cmath>

namespace dosessr::bayes {

using gaussian::MvnSpec;
using gaussian::QmcConfig;

Prior Prior::flat() { return {}; }

Prior Prior::conjugate_normal(Eigen::VectorXd mu0, Eigen::VectorXd tau0) {
    if (mu0.size() != tau0.size() || mu0.size() < 1) {
        throw DomainError("Prior: mu0 and tau0 lengths disagree");
    }
    if (!mu0.allFinite() || !tau0.allFinite() || (tau0.array() <= 0.0).any()) {
        throw DomainError("Prior: tau0 entries must be positive and finite");
    }
    Prior p;
    p.kind = Kind::conjugate;
    p.mu0 = std::move(mu0);
    p.tau0 = std::move(tau0);
    return p;
}

Prior Prior::general(std::function<double(const Eigen::VectorXd&)> log_density) {
    if (!log_density) {
        throw DomainError("Prior: general prior needs a log density");
    }
    Prior p;
    p.kind = Kind::general;
    p.log_density = std::move(log_density);
    return p;
}

namespace {

// Laplace approximation: quasi-Newton (BFGS) mode search on the log posterior
// started at the stage-1 means, then a central-difference Hessian with step
// 1e-4 * (1 + |mu_i|).
PosteriorNormal laplace_posterior(const std::function<double(const Eigen::VectorXd&)>& log_post,
                                  const Eigen::VectorXd& start) {
    const int k = static_cast<int>(start.size());
    const auto neg = [&](const Eigen::VectorXd& x) { return -log_post(x); };

    const auto grad = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(k);
        Eigen::VectorXd xp = x;
        for (int i = 0; i < k; ++i) {
            const double h = 1e-6 * (1.0 + std::abs(x[i]));
            xp[i] = x[i] + h;
            const double fp = neg(xp);
            xp[i] = x[i] - h;
            const double fm = neg(xp);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    };

    Eigen::VectorXd x = start;
    double fx = neg(x);
    if (!std::isfinite(fx)) {
        throw DomainError("posterior: log density is not finite at the stage-1 means");
    }
    Eigen::VectorXd g = grad(x);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(k, k);

    bool converged = false;
    for (int it = 0; it < 500; ++it) {
        if (g.cwiseAbs().maxCoeff() < 1e-8) {
            converged = true;
            break;
        }
        Eigen::VectorXd p = -(hinv * g);
        if (p.dot(g) >= 0.0) {
            p = -g;
            hinv.setIdentity();
        }
        double step = 1.0;
        double fnew = 0.0;
        Eigen::VectorXd xnew;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            xnew = x + step * p;
            fnew = neg(xnew);
            if (std::isfinite(fnew) && fnew <= fx + 1e-4 * step * g.dot(p)) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) {
            throw ConvergenceError("posterior: line search failed in mode search");
        }
        const Eigen::VectorXd gnew = grad(xnew);
        const Eigen::VectorXd s = xnew - x;
        const Eigen::VectorXd y = gnew - g;
        const double sy = s.dot(y);
        if (sy > 1e-12) {
            const Eigen::VectorXd hy = hinv * y;
            const double yhy = y.dot(hy);
            hinv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                    (hy * s.transpose() + s * hy.transpose()) / sy;
        }
        x = xnew;
        fx = fnew;
        g = gnew;
    }
    if (!converged) {
        throw ConvergenceError("posterior: mode search did not converge in 500 iterations");
    }

    Eigen::MatrixXd neg_hess(k, k);
    Eigen::VectorXd h(k);
    for (int i = 0; i < k; ++i) h[i] = 1e-4 * (1.0 + std::abs(x[i]));
    const double f0 = log_post(x);
    Eigen::VectorXd xp = x;
    for (int i = 0; i < k; ++i) {
        xp[i] = x[i] + h[i];
        const double fp = log_post(xp);
        xp[i] = x[i] - h[i];
        const double fm = log_post(xp);
        xp[i] = x[i];
        neg_hess(i, i) = -(fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (int j = i + 1; j < k; ++j) {
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            const double fpp = log_post(xp);
            xp[j] = x[j] - h[j];
            const double fpm = log_post(xp);
            xp[i] = x[i] - h[i];
            xp[j] = x[j] + h[j];
            const double fmp = log_post(xp);
            xp[j] = x[j] - h[j];
            const double fmm = log_post(xp);
            xp[i] = x[i];
            xp[j] = x[j];
            const double v = -(fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            neg_hess(i, j) = v;
            neg_hess(j, i) = v;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg_hess);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw NumericError("posterior: log posterior is not locally concave at the mode");
    }
    const Eigen::MatrixXd omega = es.eigenvectors() *
                                  es.eigenvalues().cwiseInverse().asDiagonal() *
                                  es.eigenvectors().transpose();
    return {std::move(x), omega};
}

}  // namespace

PosteriorNormal posterior(const Prior& prior, const InterimState& interim, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("posterior: sigma must be positive");
    const int k = static_cast<int>(interim.ybar1().size());
    const Eigen::VectorXd data_precision =
        interim.n1() * interim.phi1().weights() / (sigma * sigma);

    switch (prior.kind) {
        case Prior::Kind::flat: {
            return {interim.ybar1(),
                    Eigen::MatrixXd(data_precision.cwiseInverse().asDiagonal())};
        }
        case Prior::Kind::conjugate: {
            if (prior.mu0.size() != k) {
                throw DomainError("posterior: prior dimension must match the arm count");
            }
            const Eigen::VectorXd prec = prior.tau0 + data_precision;
            const Eigen::VectorXd mean =
                (prior.tau0.array() * prior.mu0.array() +
                 data_precision.array() * interim.ybar1().array()) /
                prec.array();
            return {mean, Eigen::MatrixXd(prec.cwiseInverse().asDiagonal())};
        }
        case Prior::Kind::general: {
            const Eigen::VectorXd ybar = interim.ybar1();
            const auto log_post = [&, data_precision, ybar](const Eigen::VectorXd& mu) {
                const double loglik =
                    -0.5 * (data_precision.array() * (ybar - mu).array().square()).sum();
                return loglik + prior.log_density(mu);
            };
            return laplace_posterior(log_post, ybar);
        }
    }
    throw DomainError("posterior: unknown prior kind");
}

namespace {

struct SingleDesignTerms {
    double w1, w2, s2, z_alpha;
};

SingleDesignTerms single_terms(const TwoStageDesign& design) {
    return {design.w1(0), design.w2(0), design.contrast_information(0, design.alloc2),
            design.z_alpha()};
}

}  // namespace

double pp_closed_form_single(const PosteriorNormal& post, double n2, const InterimState& interim,
                             const TwoStageDesign& design) {
    if (!(n2 > 0.0)) throw DomainError("pp_closed_form_single: n2 must be positive");
    if (design.n_contrasts() != 1) {
        throw DomainError("pp_closed_form_single: design must have exactly one contrast");
    }
    const auto [w1, w2, s2, z_alpha] = single_terms(design);
    const Eigen::VectorXd c = design.contrasts.row(0);
    const double delta_star = c.dot(post.mean);
    // Predictive variance of the stage-2 observed effect: posterior piece plus
    // the sampling piece sigma^2/n2 * sum c^2/phi.
    const double pred_var = c.dot(post.cov * c) + design.sigma * design.sigma * s2 / n2;
    const double t1 = interim.t1()[0];

    const double stage2_mean = delta_star * std::sqrt(n2) / (design.sigma * std::sqrt(s2));
    const double a_star = (std::sqrt(w1) * t1 + std::sqrt(w2) * stage2_mean) / std::sqrt(w1 + w2);
    // b* = w2/(w1+w2) * w*(n2)/w~2(n2), i.e. Var(T~2) rescaled by the weight share.
    const double var_t2 = pred_var * n2 / (design.sigma * design.sigma * s2);
    const double b_star = w2 / (w1 + w2) * var_t2;
    return gaussian::norm_cdf((a_star - z_alpha) / std::sqrt(b_star));
}

double pp_closed_form_multi(const PosteriorNormal& post, double n2, const InterimState& interim,
                            const TwoStageDesign& design, double u_alpha, const QmcConfig& cfg) {
    if (!(n2 > 0.0)) throw DomainError("pp_closed_form_multi: n2 must be positive");
    const int m = design.n_contrasts();
    const Eigen::MatrixXd& c = design.contrasts.matrix();
    Eigen::VectorXd w1(m), w2(m), info2(m);
    for (int r = 0; r < m; ++r) {
        w1[r] = design.w1(r);
        w2[r] = design.w2(r);
        info2[r] = design.contrast_information(r, design.alloc2);
    }
    const Eigen::VectorXd delta_star = c * post.mean;

    Eigen::VectorXd mean(m);
    for (int r = 0; r < m; ++r) {
        const double stage2_mean =
            delta_star[r] * std::sqrt(n2) / (design.sigma * std::sqrt(info2[r]));
        mean[r] = (std::sqrt(w1[r]) * interim.t1()[r] + std::sqrt(w2[r]) * stage2_mean) /
                  std::sqrt(w1[r] + w2[r]);
    }

    // Sigma2*(n2) = posterior covariance + diag(sigma^2 / (n2 phi2)).
    Eigen::MatrixXd pred = post.cov;
    pred.diagonal() +=
        (design.sigma * design.sigma / n2) * design.alloc2.weights().cwiseInverse();
    const Eigen::MatrixXd cpc = c * pred * c.transpose();
    Eigen::MatrixXd b_star(m, m);
    for (int r = 0; r < m; ++r) {
        for (int s = 0; s < m; ++s) {
            const double scale = std::sqrt(w2[r] * w2[s] / (info2[r] * info2[s])) /
                                 std::sqrt((w1[r] + w2[r]) * (w1[s] + w2[s]));
            b_star(r, s) = n2 / (design.sigma * design.sigma) * cpc(r, s) * scale;
        }
    }
    const auto est =
        gaussian::mvn_equicoordinate_cdf(MvnSpec(std::move(mean), std::move(b_star)), u_alpha, cfg);
    return 1.0 - est.value;
}

McEstimate pp_monte_carlo(const std::vector<Eigen::VectorXd>& posterior_samples, double n2,
                          const InterimState& interim, const TwoStageDesign& design,
                          double critical, const QmcConfig& cfg) {
    if (posterior_samples.size() < 100) {
        throw InsufficientSamplesError("pp_monte_carlo: at least 100 posterior samples required");
    }
    const int m = design.n_contrasts();
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const Eigen::VectorXd& mu : posterior_samples) {
        if (mu.size() != design.arms()) {
            throw DomainError("pp_monte_carlo: sample length must match the arm count");
        }
        const Eigen::VectorXd delta = design.contrasts.matrix() * mu;
        const double cp = (m == 1)
                              ? freq::conditional_power_single(n2, delta[0], interim, design)
                              : freq::conditional_power_multi(n2, delta, interim, design,
                                                              critical, cfg);
        sum += cp;
        sum_sq += cp * cp;
    }
    const double s = static_cast<double>(posterior_samples.size());
    const double mean = sum / s;
    const double var = std::max(0.0, (sum_sq - s * mean * mean) / (s - 1.0));
    return {mean, std::sqrt(var / s)};
}

double pp_at_zero(const PosteriorNormal& post, const InterimState& interim,
                  const TwoStageDesign& design, double critical, const QmcConfig& cfg) {
    (void)post;   // the posterior-variance term vanishes in the n2 -> 0 limit
    if (design.n_contrasts() == 1) {
        const auto [w1, w2, s2, z_alpha] = single_terms(design);
        (void)s2;
        const double t1 = interim.t1()[0];
        return gaussian::norm_cdf((std::sqrt(w1) * t1 - critical * std::sqrt(w1 + w2)) /
                                  std::sqrt(w2));
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(design.n_contrasts());
    freq::ConditionalLaw law = freq::conditional_law_multi(1.0, zero, interim, design);
    const auto est = gaussian::mvn_equicoordinate_cdf(
        MvnSpec(std::move(law.mean), std::move(law.cov)), critical, cfg);
    return 1.0 - est.value;
}

namespace {

SsrDecision pp_decide_impl(const InterimState& interim, const TwoStageDesign& design,
                           const Prior& prior, double critical, const QmcConfig& cfg) {
    const bool single = design.n_contrasts() == 1;
    const PosteriorNormal post = posterior(prior, interim, design.sigma);
    const auto pp = [&](double n2) {
        return single ? pp_closed_form_single(post, n2, interim, design)
                      : pp_closed_form_multi(post, n2, interim, design, critical, cfg);
    };

    SsrDecision out;
    out.metric_at_n2 = pp(design.n2);
    out.metric_at_zero = pp_at_zero(post, interim, design, critical, cfg);
    const double target = 1.0 - design.beta;
    const double pp_min = design.cp_min;

    if (out.metric_at_n2 < pp_min && *out.metric_at_zero < pp_min) {
        out.zone = Zone::unfavorable;
        out.n2_new = design.n2;
        return out;
    }
    if (out.metric_at_n2 >= target || *out.metric_at_zero >= target) {
        out.zone = Zone::favorable;
        out.n2_new = design.n2;
        return out;
    }
    out.zone = Zone::promising;

    // First n2 on the unit grid with PP >= target; PP may dip before rising,
    // so the scan starts at 1. The multi-contrast path walks a stride-8
    // coarse grid first (PP is smooth on the patient scale, so a crossing
    // cannot hide strictly inside a stride) and refines the hit interval.
    double first = -1.0;
    const double n_hi = design.n_max;
    if (single) {
        for (double g = 1.0; g <= n_hi + 1e-9; g += 1.0) {
            if (pp(g) >= target) {
                first = g;
                break;
            }
        }
    } else {
        double prev = 0.0;
        for (double g = 1.0; g <= n_hi + 8.0 - 1e-9 && first < 0.0; g += 8.0) {
            const double probe = std::min(g, n_hi);
            if (pp(probe) >= target) {
                for (double f = prev + 1.0; f <= probe + 1e-9; f += 1.0) {
                    if (pp(f) >= target) {
                        first = f;
                        break;
                    }
                }
            }
            prev = probe;
            if (probe >= n_hi) break;
        }
    }
    const double chosen = (first > 0.0) ? std::min(first, design.n_max) : design.n_max;
    out.n2_new = std::min(std::max(chosen, design.n2), design.n_max);
    return out;
}

}  // namespace

SsrDecision pp_ssr_decide(const InterimState& interim, const TwoStageDesign& design,
                          const Prior& prior) {
    if (design.n_contrasts() != 1) {
        throw DomainError("pp_ssr_decide: single-contrast overload needs exactly one contrast");
    }
    return pp_decide_impl(interim, design, prior, design.z_alpha(), {});
}

SsrDecision pp_ssr_decide(const InterimState& interim, const TwoStageDesign& design,
                          const Prior& prior, double u_alpha, const QmcConfig& cfg) {
    if (design.n_contrasts() == 1) {
        return pp_decide_impl(interim, design, prior, design.z_alpha(), {});
    }
    return pp_decide_impl(interim, design, prior, u_alpha, cfg);
}

}  // namespace dosessr::bayes
