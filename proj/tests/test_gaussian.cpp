#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dosessr/gaussian.hpp"
#include "dosessr/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace dosessr;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using gaussian::MvnSpec;
using gaussian::QmcConfig;

namespace {

// Deterministic random PSD spec; rank-deficient when dropped_rank > 0.
MvnSpec random_spec(int m, std::uint64_t seed, int dropped_rank = 0) {
    const int r = m - dropped_rank;
    MatrixXd a(m, r);
    VectorXd mean(m);
    for (int i = 0; i < m; ++i) {
        mean[i] = 2.0 * oracles::normal_draw(seed, 1000 + i, 0);
        for (int j = 0; j < r; ++j) {
            a(i, j) = oracles::normal_draw(seed, i, j);
        }
    }
    MatrixXd cov = a * a.transpose();
    cov = 0.5 * (cov + cov.transpose());
    return MvnSpec(mean, cov);
}

}  // namespace

TEST_CASE("norm_cdf matches the series oracle to 1e-12") {
    CHECK(gaussian::norm_cdf(0.0) == 0.5);
    for (double x = -8.0; x <= 8.0; x += 0.37) {
        const double expected = static_cast<double>(oracles::norm_cdf_series(x));
        CHECK(std::abs(gaussian::norm_cdf(x) - expected) <= 1e-12);
    }
    CHECK(gaussian::norm_cdf(1.2816) == doctest::Approx(0.90).epsilon(0).scale(0).epsilon(1e-4));
    CHECK(std::abs(gaussian::norm_cdf(1.2816) -
                   static_cast<double>(oracles::norm_cdf_series(1.2816L))) < 1e-13);
}

TEST_CASE("norm_cdf symmetry: Phi(x) + Phi(-x) = 1") {
    for (double x = 0.0; x <= 6.0; x += 0.21) {
        CHECK(std::abs(gaussian::norm_cdf(x) + gaussian::norm_cdf(-x) - 1.0) <= 1e-15);
    }
}

TEST_CASE("norm_cdf rejects non-finite input") {
    CHECK_THROWS_AS(gaussian::norm_cdf(std::nan("")), DomainError);
    CHECK_THROWS_AS(gaussian::norm_cdf(INFINITY), DomainError);
}

TEST_CASE("norm_quantile against the bisection oracle") {
    CHECK(gaussian::norm_quantile(0.5) == 0.0);
    CHECK(std::abs(gaussian::norm_quantile(0.90) - 1.2816) < 1e-4);
    CHECK(std::abs(gaussian::norm_quantile(0.90) - oracles::norm_quantile_bisect(0.90)) < 1e-9);
    CHECK(std::abs(gaussian::norm_quantile(0.80) - 0.8416) < 1e-4);
    CHECK(std::abs(gaussian::norm_quantile(0.80) - oracles::norm_quantile_bisect(0.80)) < 1e-9);
}

TEST_CASE("norm_quantile round trip and domain errors") {
    for (double p : {1e-12, 1e-6, 0.025, 0.2, 0.5, 0.8, 0.9, 0.975, 1.0 - 1e-9}) {
        CHECK(std::abs(gaussian::norm_cdf(gaussian::norm_quantile(p)) - p) <= 1e-10);
    }
    CHECK_THROWS_AS(gaussian::norm_quantile(0.0), DomainError);
    CHECK_THROWS_AS(gaussian::norm_quantile(1.0), DomainError);
    CHECK_THROWS_AS(gaussian::norm_quantile(-0.1), DomainError);
}

TEST_CASE("MvnSpec validation") {
    CHECK_THROWS_AS(MvnSpec(VectorXd::Zero(2), MatrixXd::Identity(3, 3)), DomainError);
    MatrixXd asym(2, 2);
    asym << 1.0, 0.2, 0.4, 1.0;
    CHECK_THROWS_AS(MvnSpec(VectorXd::Zero(2), asym), DomainError);
    MatrixXd indef(2, 2);
    indef << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(MvnSpec(VectorXd::Zero(2), indef), NumericError);
}

TEST_CASE("orthant CDF: dimension one reduces to norm_cdf") {
    MvnSpec spec(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    const auto est = gaussian::mvn_upper_orthant_cdf(spec, VectorXd::Constant(1, 1.2816));
    CHECK(est.std_error == 0.0);
    CHECK(est.value == doctest::Approx(gaussian::norm_cdf(1.2816)).epsilon(1e-14));
}

TEST_CASE("orthant CDF: independence product at the origin") {
    MvnSpec spec(VectorXd::Zero(3), MatrixXd::Identity(3, 3));
    const auto est = gaussian::mvn_upper_orthant_cdf(spec, VectorXd::Zero(3));
    CHECK(std::abs(est.value - 0.125) <= 1e-4);
}

TEST_CASE("orthant CDF: dimension guard and shape errors") {
    MvnSpec spec(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(gaussian::mvn_upper_orthant_cdf(spec, VectorXd::Zero(3)), DomainError);
    MvnSpec spec17(VectorXd::Zero(17), MatrixXd::Identity(17, 17));
    CHECK_THROWS_AS(gaussian::mvn_upper_orthant_cdf(spec17, VectorXd::Zero(17)),
                    UnsupportedDimensionError);
}

TEST_CASE("orthant CDF: combined-test correlation vs plain MC at 1.9") {
    const auto design = fixtures::multi_early();
    const MatrixXd corr = design::combined_null_correlation(design);
    MvnSpec spec(VectorXd::Zero(4), corr);
    const auto qmc = gaussian::mvn_upper_orthant_cdf(spec, VectorXd::Constant(4, 1.9));
    const auto mc = oracles::mvn_orthant_plain_mc(spec.mean(), spec.cov(),
                                                  VectorXd::Constant(4, 1.9), 1000000, 21u);
    const double tol = 3.0 * std::hypot(qmc.std_error, mc.std_error);
    CHECK(std::abs(qmc.value - mc.value) <= tol);
}

TEST_CASE("equicoordinate CDF special cases") {
    MvnSpec one(VectorXd::Constant(1, 0.4), MatrixXd::Constant(1, 1, 4.0));
    CHECK(gaussian::mvn_equicoordinate_cdf(one, 1.0).value ==
          doctest::Approx(gaussian::norm_cdf((1.0 - 0.4) / 2.0)).epsilon(1e-14));

    MvnSpec indep(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    CHECK(std::abs(gaussian::mvn_equicoordinate_cdf(indep, 0.0).value - 0.25) <= 1e-4);

    MatrixXd degenerate(2, 2);
    degenerate << 1, 1, 1, 1;
    MvnSpec perfect(VectorXd::Zero(2), degenerate);
    CHECK(std::abs(gaussian::mvn_equicoordinate_cdf(perfect, 0.0).value - 0.5) <= 1e-4);
}

TEST_CASE("equicoordinate CDF is nondecreasing in u under a fixed seed") {
    const auto design = fixtures::multi_early();
    MvnSpec spec(VectorXd::Zero(4), design::combined_null_correlation(design));
    QmcConfig cfg;
    double prev = -1.0;
    for (int i = 0; i < 50; ++i) {
        const double u = -3.0 + 6.0 * i / 49.0;
        const double v = gaussian::mvn_equicoordinate_cdf(spec, u, cfg).value;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("independence factorization for diagonal covariance") {
    for (std::uint64_t seed : {5u, 6u, 7u}) {
        const int m = 4;
        VectorXd mean(m), var(m), upper(m);
        for (int i = 0; i < m; ++i) {
            mean[i] = oracles::normal_draw(seed, i, 100);
            var[i] = 0.3 + std::abs(oracles::normal_draw(seed, i, 200));
            upper[i] = mean[i] + 2.0 * oracles::normal_draw(seed, i, 300);
        }
        MvnSpec spec(mean, MatrixXd(var.asDiagonal()));
        const auto est = gaussian::mvn_upper_orthant_cdf(spec, upper);
        double expected = 1.0;
        for (int i = 0; i < m; ++i) {
            expected *= gaussian::norm_cdf((upper[i] - mean[i]) / std::sqrt(var[i]));
        }
        CHECK(std::abs(est.value - expected) <= std::max(3.0 * est.std_error, 1e-6));
    }
}

TEST_CASE("seed determinism: identical inputs give bit-identical estimates") {
    const auto spec = random_spec(5, 99u);
    QmcConfig cfg;
    cfg.seed = 424242;
    const VectorXd upper = VectorXd::Constant(5, 0.7);
    const auto a = gaussian::mvn_upper_orthant_cdf(spec, upper, cfg);
    const auto b = gaussian::mvn_upper_orthant_cdf(spec, upper, cfg);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    QmcConfig other = cfg;
    other.seed = 424243;
    const auto c = gaussian::mvn_upper_orthant_cdf(spec, upper, other);
    CHECK(a.value != c.value);   // different randomization
}

TEST_CASE("QMC orthant estimates agree with a 1e6-draw plain MC oracle") {
    int case_id = 0;
    for (int m : {2, 3, 4, 8}) {
        for (int rep = 0; rep < 5; ++rep) {
            const std::uint64_t seed = 1000u + 17u * static_cast<unsigned>(case_id);
            const int drop = (case_id % 4 == 3) ? 1 : 0;   // every fourth case rank-deficient
            const auto spec = random_spec(m, seed, drop);
            VectorXd upper(m);
            for (int i = 0; i < m; ++i) {
                upper[i] = spec.mean()[i] +
                           1.5 * std::sqrt(spec.cov()(i, i) + 0.1) *
                               (0.2 + oracles::normal_draw(seed, 77, i));
            }
            const auto qmc = gaussian::mvn_upper_orthant_cdf(spec, upper);
            const auto mc =
                oracles::mvn_orthant_plain_mc(spec.mean(), spec.cov(), upper, 1000000, seed + 1);
            const double tol = 3.0 * std::hypot(qmc.std_error, mc.std_error) + 2e-4;
            INFO("case ", case_id, " m=", m, " qmc=", qmc.value, " mc=", mc.value);
            CHECK(std::abs(qmc.value - mc.value) <= tol);
            ++case_id;
        }
    }
}

TEST_CASE("equicoordinate quantile: reductions and round trips") {
    MvnSpec one(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    CHECK(std::abs(gaussian::mvn_equicoordinate_quantile(one, 0.90) - 1.2816) <= 1e-3);

    MatrixXd degenerate(2, 2);
    degenerate << 1, 1, 1, 1;
    MvnSpec perfect(VectorXd::Zero(2), degenerate);
    CHECK(std::abs(gaussian::mvn_equicoordinate_quantile(perfect, 0.90) - 1.2816) <= 1e-3);

    const auto design = fixtures::multi_early();
    MvnSpec corr(VectorXd::Zero(4), design::combined_null_correlation(design));
    QmcConfig cfg;
    for (double p : {0.8, 0.9, 0.95}) {
        const double u = gaussian::mvn_equicoordinate_quantile(corr, p, cfg);
        CHECK(std::abs(gaussian::mvn_equicoordinate_cdf(corr, u, cfg).value - p) <=
              2.0 * cfg.abs_tol);
    }
}

TEST_CASE("equicoordinate quantile: stability across seeds and MC agreement") {
    const auto design = fixtures::multi_early();
    MvnSpec corr(VectorXd::Zero(4), design::combined_null_correlation(design));
    double u0 = 0.0;
    for (int s = 0; s < 5; ++s) {
        QmcConfig cfg;
        cfg.seed = 555u + static_cast<unsigned>(s);
        const double u = gaussian::mvn_equicoordinate_quantile(corr, 0.90, cfg);
        if (s == 0) {
            u0 = u;
        } else {
            CHECK(std::abs(u - u0) <= 2e-3);
        }
    }
    const auto mc = oracles::mvn_orthant_plain_mc(corr.mean(), corr.cov(),
                                                  VectorXd::Constant(4, u0), 1000000, 4040u);
    CHECK(std::abs(mc.value - 0.90) <= 3.0 * mc.std_error + 2e-3);
}

TEST_CASE("equicoordinate quantile requires zero mean and valid p") {
    MvnSpec shifted(VectorXd::Constant(2, 1.0), MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(gaussian::mvn_equicoordinate_quantile(shifted, 0.9), DomainError);
    MvnSpec ok(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(gaussian::mvn_equicoordinate_quantile(ok, 0.0), DomainError);
    CHECK_THROWS_AS(gaussian::mvn_equicoordinate_quantile(ok, 1.0), DomainError);
}

TEST_CASE("QmcConfig validation") {
    QmcConfig bad;
    bad.sample_budget = 64;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = QmcConfig{};
    bad.randomizations = 2;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = QmcConfig{};
    bad.abs_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}
