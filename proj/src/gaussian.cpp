#include "dosessr/gaussian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "dosessr/rng.hpp"

namespace dosessr::gaussian {

namespace {

constexpr double kSqrt1_2 = 0.70710678118654752440;

// sqrt of the first kMaxDim primes; Richtmyer generators for the QMC lattice.
constexpr std::array<double, kMaxDim> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                                 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

double norm_pdf(double x) noexcept {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double norm_cdf(double x) {
    if (!std::isfinite(x)) {
        throw DomainError("norm_cdf: input must be finite");
    }
    return 0.5 * std::erfc(-x * kSqrt1_2);
}

namespace {

// Unchecked CDF for internal hot loops.
inline double phi_fast(double x) noexcept { return 0.5 * std::erfc(-x * kSqrt1_2); }

// Wichura (1988) algorithm AS 241, PPND16: double-precision normal quantile.
double ppnd16(double p) noexcept {
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) *
                        r +
                    4.5921953931549871457e+4) *
                       r +
                   1.3731693765509461125e+4) *
                      r +
                  1.9715909503065514427e+3) *
                     r +
                 1.3314166789178437745e+2) *
                    r +
                3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) *
                        r +
                    2.1213794301586595867e+4) *
                       r +
                   5.3941960214247511077e+3) *
                      r +
                  6.8718700749205790830e+2) *
                     r +
                 4.2313330701600911252e+1) *
                    r +
                1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) *
                       r +
                   1.27045825245236838258e+0) *
                      r +
                  3.64784832476320460504e+0) *
                     r +
                 5.76949722146069140550e+0) *
                    r +
                4.63033784615654529590e+0) *
                   r +
               1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) *
                       r +
                   1.48103976427480074590e-1) *
                      r +
                  6.89767334985100004550e-1) *
                     r +
                 1.67638483018380384940e+0) *
                    r +
                2.05319162663775882187e+0) *
                   r +
               1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) *
                       r +
                   2.65321895265761230930e-2) *
                      r +
                  2.96560571828504891230e-1) *
                     r +
                 1.78482653991729133580e+0) *
                    r +
                5.46378491116411436990e+0) *
                   r +
               6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) *
                       r +
                   7.86869131145613259100e-4) *
                      r +
                  1.48753612908506148525e-2) *
                     r +
                 1.36929880922735805310e-1) *
                    r +
                5.99832206555887937690e-1) *
                   r +
               1.0);
    }
    return (q < 0.0) ? -val : val;
}

}  // namespace

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("norm_quantile: p must lie strictly in (0, 1)");
    }
    return ppnd16(p);
}

MvnSpec::MvnSpec(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
    const auto m = mean_.size();
    if (m < 1) {
        throw DomainError("MvnSpec: dimension must be at least 1");
    }
    if (cov_.rows() != m || cov_.cols() != m) {
        throw DomainError("MvnSpec: mean and covariance dimensions disagree");
    }
    if (!mean_.allFinite() || !cov_.allFinite()) {
        throw DomainError("MvnSpec: entries must be finite");
    }
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if (((cov_ - cov_.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * scale) {
        throw DomainError("MvnSpec: covariance must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-10 * std::max(lmax, 0.0) && lmin < -1e-14 * scale) {
        throw NumericError("MvnSpec: covariance is not positive semi-definite");
    }
}

void QmcConfig::validate() const {
    if (sample_budget < 128) {
        throw DomainError("QmcConfig: sample_budget must be at least 128");
    }
    if (randomizations < 4) {
        throw DomainError("QmcConfig: randomizations must be at least 4");
    }
    if (!(abs_tol > 0.0)) {
        throw DomainError("QmcConfig: abs_tol must be positive");
    }
}

namespace {

// Cholesky factor in greedy integration order (Genz-Bretz variable
// reordering: the coordinate with the smallest conditional probability is
// integrated first). Rank-deficient directions get a zero pivot and become
// indicator constraints in the integrand.
struct SovFactor {
    int m = 0;
    int qdims = 0;
    double L[kMaxDim][kMaxDim] = {};
    double b[kMaxDim] = {};
    bool regular[kMaxDim] = {};
};

// E[Z | Z <= beta] for a standard normal, stable for very negative beta.
double truncated_mean(double beta) noexcept {
    const double cdf = phi_fast(beta);
    if (cdf < 1e-290) {
        return beta + 1.0 / beta;
    }
    return -norm_pdf(beta) / cdf;
}

SovFactor sov_factorize(const Eigen::MatrixXd& cov, const Eigen::VectorXd& limits) {
    const int m = static_cast<int>(limits.size());
    SovFactor f;
    f.m = m;

    Eigen::MatrixXd a = cov;
    std::array<double, kMaxDim> b{};
    for (int i = 0; i < m; ++i) b[i] = limits[i];

    const double eps = 1e-12 * std::max(1.0, a.diagonal().maxCoeff());
    std::array<double, kMaxDim> ytilde{};

    for (int i = 0; i < m; ++i) {
        // Pick the remaining coordinate with the smallest conditional
        // probability estimate (plugging truncated means for settled dims).
        int best = i;
        double best_p = std::numeric_limits<double>::infinity();
        for (int j = i; j < m; ++j) {
            double v = a(j, j);
            double s = 0.0;
            for (int l = 0; l < i; ++l) {
                v -= f.L[j][l] * f.L[j][l];
                s += f.L[j][l] * ytilde[l];
            }
            const double pj =
                (v > eps) ? phi_fast((b[j] - s) / std::sqrt(v)) : (b[j] - s >= 0.0 ? 1.0 : 0.0);
            if (pj < best_p) {
                best_p = pj;
                best = j;
            }
        }
        if (best != i) {
            a.row(best).swap(a.row(i));
            a.col(best).swap(a.col(i));
            std::swap(b[best], b[i]);
            for (int l = 0; l < i; ++l) std::swap(f.L[best][l], f.L[i][l]);
        }

        double v = a(i, i);
        double s = 0.0;
        for (int l = 0; l < i; ++l) {
            v -= f.L[i][l] * f.L[i][l];
            s += f.L[i][l] * ytilde[l];
        }
        if (v > eps) {
            const double lii = std::sqrt(v);
            f.L[i][i] = lii;
            f.regular[i] = true;
            for (int j = i + 1; j < m; ++j) {
                double x = a(j, i);
                for (int l = 0; l < i; ++l) x -= f.L[j][l] * f.L[i][l];
                f.L[j][i] = x / lii;
            }
            ytilde[i] = truncated_mean((b[i] - s) / lii);
        } else {
            // PSD residual with (near-)zero variance: the whole residual row
            // vanishes, so the coordinate is deterministic given earlier ones.
            f.L[i][i] = 0.0;
            f.regular[i] = false;
            for (int j = i + 1; j < m; ++j) f.L[j][i] = 0.0;
            ytilde[i] = 0.0;
        }
        f.b[i] = b[i];
    }

    for (int i = 0; i + 1 < m; ++i) {
        if (f.regular[i]) ++f.qdims;
    }
    return f;
}

double sov_integrand(const SovFactor& f, const double* w) noexcept {
    double y[kMaxDim];
    double p = 1.0;
    int wi = 0;
    for (int i = 0; i < f.m; ++i) {
        double s = 0.0;
        for (int l = 0; l < i; ++l) s += f.L[i][l] * y[l];
        if (f.regular[i]) {
            const double e = phi_fast((f.b[i] - s) / f.L[i][i]);
            if (e <= 0.0) return 0.0;
            p *= e;
            if (i + 1 < f.m) {
                double u = w[wi++] * e;
                u = std::clamp(u, 1e-300, 1.0 - 1e-16);
                y[i] = ppnd16(u);
            }
        } else {
            if (f.b[i] - s < 0.0) return 0.0;
            y[i] = 0.0;
        }
    }
    return p;
}

MvnEstimate sov_integrate(const SovFactor& f, const QmcConfig& cfg) {
    if (f.qdims == 0) {
        return {sov_integrand(f, nullptr), 0.0};
    }
    const std::uint64_t shift_seed = rng::splitmix64(cfg.seed ^ 0x51AC0FFEEull);

    double q[kMaxDim];
    for (int i = 0; i < f.qdims; ++i) {
        const double sq = std::sqrt(kPrimes[i]);
        q[i] = sq - std::floor(sq);
    }

    std::vector<double> per_shift(cfg.randomizations);
    for (int r = 0; r < cfg.randomizations; ++r) {
        double x[kMaxDim];
        for (int i = 0; i < f.qdims; ++i) {
            x[i] = rng::uniform_open(shift_seed, static_cast<std::uint64_t>(r),
                                     static_cast<std::uint64_t>(i));
        }
        double acc = 0.0;
        for (int j = 0; j < cfg.sample_budget; ++j) {
            for (int i = 0; i < f.qdims; ++i) {
                x[i] += q[i];
                if (x[i] >= 1.0) x[i] -= 1.0;
            }
            acc += sov_integrand(f, x);
        }
        per_shift[r] = acc / cfg.sample_budget;
    }

    double mean = 0.0;
    for (double v : per_shift) mean += v;
    mean /= cfg.randomizations;
    double ss = 0.0;
    for (double v : per_shift) ss += (v - mean) * (v - mean);
    const double se =
        std::sqrt(ss / (static_cast<double>(cfg.randomizations) *
                        (cfg.randomizations - 1)));
    return {std::clamp(mean, 0.0, 1.0), se};
}

}  // namespace

MvnEstimate mvn_upper_orthant_cdf(const MvnSpec& spec, const Eigen::VectorXd& upper,
                                  const QmcConfig& cfg) {
    cfg.validate();
    const int m = spec.dim();
    if (m > kMaxDim) {
        throw UnsupportedDimensionError("mvn_upper_orthant_cdf: dimension above 16");
    }
    if (upper.size() != m) {
        throw DomainError("mvn_upper_orthant_cdf: limit vector has wrong length");
    }
    if (!upper.allFinite()) {
        throw DomainError("mvn_upper_orthant_cdf: limits must be finite");
    }
    const Eigen::VectorXd b = upper - spec.mean();
    const SovFactor f = sov_factorize(spec.cov(), b);
    return sov_integrate(f, cfg);
}

MvnEstimate mvn_equicoordinate_cdf(const MvnSpec& spec, double u, const QmcConfig& cfg) {
    return mvn_upper_orthant_cdf(spec, Eigen::VectorXd::Constant(spec.dim(), u), cfg);
}

double mvn_equicoordinate_quantile(const MvnSpec& spec, double p, const QmcConfig& cfg) {
    cfg.validate();
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("mvn_equicoordinate_quantile: p must lie in (0, 1)");
    }
    if (spec.mean().cwiseAbs().maxCoeff() > 1e-12) {
        throw DomainError("mvn_equicoordinate_quantile: spec must have zero mean");
    }
    const double max_sd = std::sqrt(std::max(spec.cov().diagonal().maxCoeff(), 1e-30));

    // Frozen randomization: every root iteration reuses the same QMC points,
    // so the objective is a deterministic, monotone function of u.
    const auto objective = [&](double u) { return mvn_equicoordinate_cdf(spec, u, cfg).value - p; };

    double lo = -12.0 * max_sd;
    double hi = 12.0 * max_sd;
    double flo = objective(lo);
    double fhi = objective(hi);
    if (flo > 0.0 || fhi < 0.0) {
        throw ConvergenceError("mvn_equicoordinate_quantile: no bracket within 12 standard deviations");
    }

    // Brent's method, safeguarded by the bracket, to 1e-5 in u.
    constexpr double kTol = 1e-5;
    double a = lo, fa = flo, bb = hi, fb = fhi;
    double c = a, fc = fa, d = bb - a, e = d;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = bb;
            bb = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(bb) + 0.5 * kTol;
        const double xm = 0.5 * (c - bb);
        if (std::abs(xm) <= tol1 || fb == 0.0) {
            return bb;
        }
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double pq, qq, rq;
            const double s = fb / fa;
            if (a == c) {
                pq = 2.0 * xm * s;
                qq = 1.0 - s;
            } else {
                qq = fa / fc;
                rq = fb / fc;
                pq = s * (2.0 * xm * qq * (qq - rq) - (bb - a) * (rq - 1.0));
                qq = (qq - 1.0) * (rq - 1.0) * (s - 1.0);
            }
            if (pq > 0.0) qq = -qq;
            pq = std::abs(pq);
            if (2.0 * pq < std::min(3.0 * xm * qq - std::abs(tol1 * qq), std::abs(e * qq))) {
                e = d;
                d = pq / qq;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = bb;
        fa = fb;
        bb += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = objective(bb);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = bb - a;
            e = d;
        }
    }
    throw ConvergenceError("mvn_equicoordinate_quantile: root refinement did not converge");
}

}  // namespace dosessr::gaussian
