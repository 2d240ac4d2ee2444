#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "dosessr/errors.hpp"

namespace {

using dosessr::cli::SpecError;

Eigen::VectorXd parse_csv_doubles(const std::string& text, const char* what) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            vals.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw SpecError("E_SCHEMA", std::string(what) + ": expected comma-separated numbers");
        }
    }
    if (vals.empty()) {
        throw SpecError("E_SCHEMA", std::string(what) + ": empty list");
    }
    Eigen::VectorXd out(static_cast<int>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<int>(i)] = vals[i];
    return out;
}

void print_error(const std::string& code, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"]["code"] = code;
    j["error"]["message"] = message;
    std::cerr << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage adaptive dose-finding designs with unblinded sample size re-estimation"};
    app.require_subcommand(1);

    std::string spec_path, timing, method_name, rounding = "per_arm_equal";
    std::string mu_csv, means_csv, sizes_csv, dump_path;
    double n_total = -1.0, target = -1.0;
    long replicates_override = -1;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int threads = 0;

    auto* contrast = app.add_subcommand("contrast", "Print the optimal contrast matrix as CSV");
    contrast->add_option("-s,--spec", spec_path, "Design spec file (JSON)")->required();

    auto* power = app.add_subcommand("power", "Fixed-design power at a given total sample size");
    power->add_option("-s,--spec", spec_path)->required();
    power->add_option("-n,--n", n_total, "Total sample size")->required();
    power->add_option("--mu", mu_csv, "True mean vector, comma separated");
    power->add_option("--timing", timing, "Stage timing label from the spec");

    auto* samplesize = app.add_subcommand("samplesize", "Required total sample size at target power");
    samplesize->add_option("-s,--spec", spec_path)->required();
    samplesize->add_option("--mu", mu_csv, "True mean vector, comma separated");
    samplesize->add_option("--target", target, "Target power (default: ssr.target_power)");
    samplesize->add_option("--rounding", rounding, "none | per_arm_equal");
    samplesize->add_option("--timing", timing, "Stage timing label from the spec");

    auto* ssr = app.add_subcommand("ssr", "Interim SSR decision from observed stage-1 summaries");
    ssr->add_option("-s,--spec", spec_path)->required();
    ssr->add_option("--means", means_csv, "Stage-1 per-arm means, comma separated")->required();
    ssr->add_option("--sizes", sizes_csv, "Stage-1 per-arm sample sizes, comma separated")->required();
    ssr->add_option("--method", method_name, "SSR method name from the spec (default: first)");
    ssr->add_option("--timing", timing, "Stage timing label from the spec");

    auto* simulate = app.add_subcommand("simulate", "Run the full study simulation, CSV to stdout");
    simulate->add_option("-s,--spec", spec_path)->required();
    simulate->add_option("--seed", seed_override, "Override the spec seed")
        ->each([&](const std::string&) { seed_given = true; });
    simulate->add_option("--replicates", replicates_override, "Override the spec replicate count");
    simulate->add_option("--threads", threads, "Worker thread cap (default: all cores)");
    simulate->add_option("--dump-metrics", dump_path, "Write per-replicate CP/PP(N2) values to PATH");

    CLI11_PARSE(app, argc, argv);

    try {
        const dosessr::cli::SpecFile spec = dosessr::cli::parse_spec_file(spec_path);
        if (contrast->parsed()) {
            return dosessr::cli::cmd_contrast(spec, std::cout);
        }
        if (power->parsed()) {
            dosessr::cli::PowerOptions opt;
            opt.timing = timing;
            opt.n = n_total;
            if (!mu_csv.empty()) opt.mu = parse_csv_doubles(mu_csv, "--mu");
            return dosessr::cli::cmd_power(spec, opt, std::cout);
        }
        if (samplesize->parsed()) {
            dosessr::cli::SampleSizeOptions opt;
            opt.timing = timing;
            opt.rounding = rounding;
            if (target > 0.0) opt.target_power = target;
            if (!mu_csv.empty()) opt.mu = parse_csv_doubles(mu_csv, "--mu");
            return dosessr::cli::cmd_samplesize(spec, opt, std::cout);
        }
        if (ssr->parsed()) {
            dosessr::cli::SsrOptions opt;
            opt.timing = timing;
            opt.method = method_name;
            opt.stage1_means = parse_csv_doubles(means_csv, "--means");
            opt.stage1_sizes = parse_csv_doubles(sizes_csv, "--sizes");
            return dosessr::cli::cmd_ssr(spec, opt, std::cout);
        }
        if (simulate->parsed()) {
            dosessr::cli::SimulateOptions opt;
            if (seed_given) opt.seed_override = seed_override;
            if (replicates_override > 0) opt.replicates_override = replicates_override;
            opt.threads = threads;
            opt.dump_metrics_path = dump_path;
            return dosessr::cli::cmd_simulate(spec, opt, std::cout);
        }
    } catch (const SpecError& e) {
        print_error(e.code(), e.what());
        return 2;
    } catch (const dosessr::DomainError& e) {
        print_error("E_DOMAIN", e.what());
        return 2;
    } catch (const dosessr::ConvergenceError& e) {
        print_error("E_CONVERGENCE", e.what());
        return 3;
    } catch (const dosessr::NumericError& e) {
        print_error("E_NUMERIC", e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error("E_INTERNAL", e.what());
        return 1;
    }
    return 0;
}
