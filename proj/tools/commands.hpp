#pragma once

// CLI subcommand implementations, separated from argument parsing so tests
// can drive them directly and compare byte-exact output.

#include <optional>
#include <ostream>
#include <string>

#include "specfile.hpp"

namespace dosessr::cli {

struct PowerOptions {
    std::string timing;                    // stage label; empty -> first
    std::optional<double> n;               // total sample size (required for power)
    std::optional<Eigen::VectorXd> mu;     // defaults to the first simulate scenario
};

struct SampleSizeOptions {
    std::string timing;
    std::optional<double> target_power;    // defaults to ssr.target_power
    std::optional<Eigen::VectorXd> mu;
    std::string rounding = "per_arm_equal";  // or "none"
};

struct SsrOptions {
    std::string timing;
    std::string method;                    // empty -> first method in the spec
    Eigen::VectorXd stage1_means;
    Eigen::VectorXd stage1_sizes;          // per-arm stage-1 counts
};

struct SimulateOptions {
    std::optional<std::uint64_t> seed_override;
    std::optional<long> replicates_override;
    int threads = 0;
    std::string dump_metrics_path;         // per-replicate metric dump, empty -> off
};

int cmd_contrast(const SpecFile& spec, std::ostream& out);
int cmd_power(const SpecFile& spec, const PowerOptions& opt, std::ostream& out);
int cmd_samplesize(const SpecFile& spec, const SampleSizeOptions& opt, std::ostream& out);
int cmd_ssr(const SpecFile& spec, const SsrOptions& opt, std::ostream& out);
int cmd_simulate(const SpecFile& spec, const SimulateOptions& opt, std::ostream& out);

// Shared CSV header for simulate output.
extern const char* kSimulateCsvHeader;

}  // namespace dosessr::cli
