#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linktt/core/types.hpp"
#include "linktt/em/types.hpp"
#include "linktt/eval/eval.hpp"
#include "linktt/stream/dstream.hpp"

namespace linktt::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Paths {
    std::string network;
    std::string trajectories;
    std::string estimates_out = "estimates.jsonl";
    std::string metrics_out = "metrics.jsonl";
    std::string store_dir;
    std::string report_json = "report.json";
    std::string report_csv = "report.csv";
    std::string ground_truth_out = "ground_truth.jsonl";
    std::string eval_pieces = "holdout_pieces.jsonl";
    std::string compare_estimates;  // optional second estimate file for evaluate
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::string profile;  // optional preset applied before explicit overrides
    Paths paths;
    em::EmConfig em;
    core::DecayConfig decay;
    core::PriorConfig prior;
    stream::SchedulerConfig scheduler;
    eval::SyntheticSpec synthetic;
    double tz_offset_s = 0.0;
    double holdout_fraction = 0.2;
    std::vector<double> piece_lengths_min = {1.0, 5.0, 10.0, 20.0};
    double bench_horizon_s = 60.0;

    // Wires cross-module fields (decay windows from the EM config, scheduler
    // interval from the time step) and validates every invariant; throws
    // ConfigError naming the offending field.
    void finalize_and_validate();
};

// Known presets; throws ConfigError for an unknown name.
void apply_profile(RunConfig& cfg, const std::string& name);
std::vector<std::string> profile_names();

// Loads a JSON config file over the defaults. Unknown keys are errors.
RunConfig load_config_file(const std::string& path);

} // namespace linktt::cli
