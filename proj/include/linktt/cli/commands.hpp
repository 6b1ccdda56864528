#pragma once

#include <string>
#include <vector>

#include "linktt/cli/config.hpp"

namespace linktt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitRuntimeError = 4;

struct RunSummary {
    std::size_t steps = 0;
    std::size_t observations = 0;
    std::size_t rejected_records = 0;
    std::size_t deadline_misses = 0;
    double wall_time_s = 0.0;
};

struct BenchResult {
    double capacity_obs_per_s = 0.0;
    double best_rate = 0.0;       // highest rate multiplier with zero misses
    double first_failing_rate = 0.0;
    std::size_t probes = 0;
};

// Generates the synthetic dataset: network file, training trajectories,
// held-out pieces (per configured piece length), and the ground truth.
int cmd_simulate(const RunConfig& cfg);

// Batch EM over the trajectory file, one window per time step, no engine.
int cmd_run_offline(const RunConfig& cfg, RunSummary* summary = nullptr);

// Replay source -> activation -> per-interval EM through the micro-batch
// engine; estimates and per-interval metrics are written to the output paths.
int cmd_run_streaming(const RunConfig& cfg, RunSummary* summary = nullptr);

// Scores held-out pieces against a saved estimate file.
int cmd_evaluate(const RunConfig& cfg);

// Binary-searches the replay rate for the highest sustained throughput with
// zero deadline misses over the configured horizon.
int cmd_bench(const RunConfig& cfg, BenchResult* result = nullptr);

// argv-level entry point used by main() and by tests.
int run_cli(const std::vector<std::string>& args);

} // namespace linktt::cli
