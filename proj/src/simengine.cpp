#include "dosessr/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "dosessr/rng.hpp"

namespace dosessr::sim {

using design::Allocation;
using gaussian::QmcConfig;

namespace {

constexpr std::uint64_t kUalphaTag = 0x75616c7068610000ull;
constexpr std::uint64_t kQmcTag = 0x716d632d73616c74ull;

int resolve_threads(int requested, int replicates) {
    int t = requested;
    if (t <= 0) {
        if (const char* env = std::getenv("DOSESSR_THREADS")) {
            t = std::atoi(env);
        }
    }
    if (t <= 0) {
        t = static_cast<int>(std::thread::hardware_concurrency());
    }
    return std::clamp(t, 1, std::max(1, replicates));
}

}  // namespace

const char* method_name(Method m) noexcept {
    switch (m) {
        case Method::FQ1: return "FQ1";
        case Method::FQ2: return "FQ2";
        case Method::FQ3: return "FQ3";
        case Method::BY1: return "BY1";
        case Method::BY2: return "BY2";
        case Method::BY3: return "BY3";
    }
    return "?";
}

MethodSpec MethodSpec::fq1() { return {}; }

MethodSpec MethodSpec::fq2(Eigen::VectorXd assumed_mu) {
    MethodSpec s;
    s.method = Method::FQ2;
    s.assumed_mu = std::move(assumed_mu);
    return s;
}

MethodSpec MethodSpec::fq3(Eigen::VectorXd assumed_mu) {
    MethodSpec s;
    s.method = Method::FQ3;
    s.assumed_mu = std::move(assumed_mu);
    return s;
}

MethodSpec MethodSpec::by1() {
    MethodSpec s;
    s.method = Method::BY1;
    return s;
}

MethodSpec MethodSpec::by2(Eigen::VectorXd mu0, Eigen::VectorXd tau0) {
    MethodSpec s;
    s.method = Method::BY2;
    s.prior_mu0 = std::move(mu0);
    s.prior_tau0 = std::move(tau0);
    return s;
}

MethodSpec MethodSpec::by3(Eigen::VectorXd mu0, Eigen::VectorXd tau0) {
    MethodSpec s;
    s.method = Method::BY3;
    s.prior_mu0 = std::move(mu0);
    s.prior_tau0 = std::move(tau0);
    return s;
}

void Scenario::validate() const {
    const int k = design.arms();
    if (true_mu.size() != k || !true_mu.allFinite()) {
        throw DomainError("Scenario: true_mu length must match the design arms");
    }
    if (replicates < 1) {
        throw DomainError("Scenario: replicates must be positive");
    }
    const Method m = method.method;
    if ((m == Method::FQ2 || m == Method::FQ3) && method.assumed_mu.size() != k) {
        throw DomainError("Scenario: FQ2/FQ3 need an assumed mean profile");
    }
    if ((m == Method::BY2 || m == Method::BY3) &&
        (method.prior_mu0.size() != k || method.prior_tau0.size() != k)) {
        throw DomainError("Scenario: BY2/BY3 need a conjugate prior (mu0, tau0)");
    }
}

Eigen::VectorXd draw_stage_means(const Eigen::VectorXd& mu, double sigma, double n,
                                 const Allocation& phi, std::uint64_t seed,
                                 std::uint64_t replicate, std::uint32_t stage) {
    if (!(n > 0.0)) throw DomainError("draw_stage_means: n must be positive");
    const int k = static_cast<int>(mu.size());
    if (phi.arms() != k) throw DomainError("draw_stage_means: allocation length disagrees");
    Eigen::VectorXd out(k);
    for (int arm = 0; arm < k; ++arm) {
        const std::uint64_t lo = (static_cast<std::uint64_t>(stage) << 32) |
                                 static_cast<std::uint64_t>(arm);
        const double u = rng::uniform_open(seed, replicate, lo);
        const double z = gaussian::norm_quantile(u);
        out[arm] = mu[arm] + z * sigma / std::sqrt(n * phi[arm]);
    }
    return out;
}

ScenarioEngine::ScenarioEngine(Scenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    const TwoStageDesign& d = scenario_.design;
    if (d.n_contrasts() == 1) {
        critical_ = d.z_alpha();
        u_alpha_ = critical_;
    } else {
        QmcConfig cfg;
        cfg.seed = rng::splitmix64(scenario_.master_seed ^ kUalphaTag);
        u_alpha_ = design::mcp_critical_value(d, cfg);
        critical_ = u_alpha_;
    }
    const Method m = scenario_.method.method;
    if (m == Method::FQ2 || m == Method::FQ3) {
        fixed_delta_ = d.contrasts.matrix() * scenario_.method.assumed_mu;
    }
    if (m == Method::BY1) {
        prior_ = bayes::Prior::flat();
    } else if (m == Method::BY2 || m == Method::BY3) {
        prior_ = bayes::Prior::conjugate_normal(scenario_.method.prior_mu0,
                                                scenario_.method.prior_tau0);
    }
    qmc_salt_ = rng::splitmix64(scenario_.master_seed ^ kQmcTag);
}

TrialOutcome ScenarioEngine::run_trial(int replicate_index) const {
    const TwoStageDesign& d = scenario_.design;
    const auto rep = static_cast<std::uint64_t>(replicate_index);

    const Eigen::VectorXd ybar1 = draw_stage_means(scenario_.true_mu, d.sigma, d.n1, d.alloc1,
                                                   scenario_.master_seed, rep, 1);
    const freq::InterimState interim =
        freq::InterimState::from_means(ybar1, d.n1, d.alloc1, d.contrasts, d.sigma);

    // The replicate index salts the QMC seed so estimator noise is
    // independent across replicates.
    QmcConfig cfg;
    cfg.seed = rng::splitmix64(qmc_salt_ + rep);

    freq::SsrDecision decision;
    const Method m = scenario_.method.method;
    if (m == Method::FQ1 || m == Method::FQ2 || m == Method::FQ3) {
        const freq::DeltaSource source = (m == Method::FQ1)
                                             ? freq::DeltaSource::observed()
                                             : freq::DeltaSource::fixed(fixed_delta_);
        decision = (d.n_contrasts() == 1)
                       ? freq::cp_ssr_decide(interim, d, source)
                       : freq::cp_ssr_decide(interim, d, source, u_alpha_, cfg);
    } else {
        decision = (d.n_contrasts() == 1)
                       ? bayes::pp_ssr_decide(interim, d, prior_)
                       : bayes::pp_ssr_decide(interim, d, prior_, u_alpha_, cfg);
    }

    const double n2_real = std::ceil(decision.n2_new - 1e-9);
    const Eigen::VectorXd ybar2 = draw_stage_means(scenario_.true_mu, d.sigma, n2_real, d.alloc2,
                                                   scenario_.master_seed, rep, 2);

    const int mrows = d.n_contrasts();
    Eigen::VectorXd t2(mrows), w1(mrows), w2(mrows);
    for (int r = 0; r < mrows; ++r) {
        t2[r] = freq::stage_statistic(ybar2, n2_real, d.alloc2, d.contrasts.row(r), d.sigma);
        w1[r] = d.w1(r);
        w2[r] = d.w2(r);
    }
    const Eigen::VectorXd combined = freq::combine_multi(interim.t1(), t2, w1, w2);

    TrialOutcome out;
    out.zone = decision.zone;
    out.metric_at_n2 = decision.metric_at_n2;
    out.final_n2 = n2_real;
    out.total_n = d.n1 + n2_real;
    out.rejected = freq::final_test(combined, critical_);
    return out;
}

std::vector<TrialOutcome> ScenarioEngine::run_all(int threads) const {
    const int r = scenario_.replicates;
    std::vector<TrialOutcome> out(static_cast<std::size_t>(r));
    const int workers = resolve_threads(threads, r);
    if (workers == 1) {
        for (int i = 0; i < r; ++i) out[static_cast<std::size_t>(i)] = run_trial(i);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([this, &out, r, workers, w]() {
            for (int i = w; i < r; i += workers) {
                out[static_cast<std::size_t>(i)] = run_trial(i);
            }
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

StudyResult ScenarioEngine::run_full(int threads) const {
    if (scenario_.replicates < 100) {
        throw DomainError("run_study: at least 100 replicates required");
    }
    const std::vector<TrialOutcome> outcomes = run_all(threads);
    const double r = static_cast<double>(outcomes.size());

    StudyResult result;
    SimulationReport& rep = result.report;
    rep.replicates = scenario_.replicates;
    long n_unf = 0, n_fav = 0, n_prom = 0, n_rej = 0;
    double metric_sum = 0.0, ss_sum = 0.0, incr_sum = 0.0;
    result.metrics.values.reserve(outcomes.size());
    for (const TrialOutcome& o : outcomes) {
        switch (o.zone) {
            case Zone::unfavorable: ++n_unf; break;
            case Zone::favorable: ++n_fav; break;
            case Zone::promising:
                ++n_prom;
                incr_sum += o.final_n2 - scenario_.design.n2;
                break;
        }
        if (o.rejected) ++n_rej;
        metric_sum += o.metric_at_n2;
        ss_sum += o.total_n;
        result.metrics.values.push_back(o.metric_at_n2);
    }
    rep.pct_unfavorable = 100.0 * n_unf / r;
    rep.pct_favorable = 100.0 * n_fav / r;
    rep.pct_promising = 100.0 * n_prom / r;
    rep.power = n_rej / r;
    rep.mean_ss = ss_sum / r;
    rep.mean_incr = (n_prom > 0) ? incr_sum / n_prom : 0.0;
    rep.metric_mean = metric_sum / r;
    double sq = 0.0;
    for (const TrialOutcome& o : outcomes) {
        const double dev = o.metric_at_n2 - rep.metric_mean;
        sq += dev * dev;
    }
    rep.metric_sd = (outcomes.size() > 1) ? std::sqrt(sq / (r - 1.0)) : 0.0;
    rep.mc_se_power = std::sqrt(rep.power * (1.0 - rep.power) / r);

    std::vector<double> sorted = result.metrics.values;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&sorted](double p) {
        const double idx = p * (static_cast<double>(sorted.size()) - 1.0);
        const auto lo = static_cast<std::size_t>(idx);
        if (lo + 1 >= sorted.size()) return sorted.back();
        const double frac = idx - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    };
    result.metrics.q25 = quantile(0.25);
    result.metrics.q50 = quantile(0.50);
    result.metrics.q75 = quantile(0.75);
    return result;
}

SimulationReport ScenarioEngine::run_study(int threads) const {
    return run_full(threads).report;
}

MetricDistribution ScenarioEngine::metric_distribution(int threads) const {
    return run_full(threads).metrics;
}

TrialOutcome run_trial(const Scenario& scenario, int replicate_index) {
    return ScenarioEngine(scenario).run_trial(replicate_index);
}

SimulationReport run_study(const Scenario& scenario, int threads) {
    return ScenarioEngine(scenario).run_study(threads);
}

MetricDistribution metric_distribution(const Scenario& scenario, int threads) {
    return ScenarioEngine(scenario).metric_distribution(threads);
}

}  // namespace dosessr::sim
