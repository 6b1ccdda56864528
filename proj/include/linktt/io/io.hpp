#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "linktt/core/types.hpp"
#include "linktt/em/em.hpp"
#include "linktt/em/types.hpp"
#include "linktt/stream/dstream.hpp"

namespace linktt::io {

inline constexpr int kFormatVersion = 1;

// Raised on malformed or missing input files; the CLI maps it to the data
// error exit code.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- road network -----------------------------------------------------------
// CSV with header id,from,to,length_m,speed_limit_mps; an optional leading
// "# format_version=1" comment line. Parse errors carry the line number,
// duplicate ids name the id.
core::RoadNetwork load_network(const std::filesystem::path& path);
void write_network(const core::RoadNetwork& net, const std::filesystem::path& path);

// --- trajectories ------------------------------------------------------------
// JSON lines, one TrajectoryMeasurement per line, after one header line
// {"format_version":1,...}. Malformed data lines are skipped and counted.
struct TrajectoryReadResult {
    std::vector<core::TrajectoryMeasurement> records;
    std::size_t skipped_lines = 0;
};
TrajectoryReadResult read_trajectories(const std::filesystem::path& path);
void write_trajectories(const std::vector<core::TrajectoryMeasurement>& trajectories,
                        const std::filesystem::path& path);

// --- replay ------------------------------------------------------------------
// Replays a trajectory file as a micro-batch source. Batch boundaries follow
// the record timestamps (logical time): interval k holds records with
// start_time in [t0 + k*interval, t0 + (k+1)*interval), t0 aligned down to a
// multiple of the interval. rate_multiplier compresses wall-clock pacing only;
// batch contents do not depend on it. Requires records sorted by start_time
// (error names the first offending index).
struct ReplaySource {
    std::filesystem::path path;
    double rate_multiplier = 1.0;
    double interval_s = 5.0;
};

std::unique_ptr<stream::Source<core::TrajectoryMeasurement>> make_replay_source(
    const ReplaySource& src);

// In-memory variant used by generators and tests; same batching rules.
std::unique_ptr<stream::Source<core::TrajectoryMeasurement>> make_replay_source(
    std::vector<core::TrajectoryMeasurement> records, double interval_s);

// --- estimates ---------------------------------------------------------------
// JSON lines; one record per (time step, link):
// {time, link_id, k, theta, mean_s, stddev_s, n_effective}, append-ordered by
// time then link index. Key order and float formatting are deterministic.
class EstimateWriter {
public:
    explicit EstimateWriter(const std::filesystem::path& path, const core::RoadNetwork& net);
    ~EstimateWriter();
    void append(const em::ModelState& state);
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct EstimateRecord {
    double time = 0.0;
    std::string link_id;
    double k = 0.0;
    double theta = 0.0;
    double mean_s = 0.0;
    double stddev_s = 0.0;
    double n_effective = 0.0;
};
std::vector<EstimateRecord> read_estimates(const std::filesystem::path& path);

// --- metrics -----------------------------------------------------------------
void write_metrics(const std::vector<stream::BatchMetrics>& metrics,
                   const std::filesystem::path& path);

// --- historical store --------------------------------------------------------
// Observations bucketed by (local day index, time-of-day slot); the slot
// granularity equals the EM time step. Weekday queries union all stored days
// that fall on the weekday. On-disk layout: one JSONL file per day under the
// store root, round-tripping exactly.
class HistoricalStore final : public em::HistoryProvider {
public:
    HistoricalStore(double slot_s, double tz_offset_s = 0.0);

    void put(const core::Observation& obs);
    std::vector<core::Observation> query(int weekday, std::int64_t slot) const;
    std::vector<core::Observation> in_range(double t_lo, double t_hi) const override;

    std::int64_t day_of(double time) const;
    int weekday_of(double time) const;
    std::int64_t slot_of(double time) const;
    double slot_seconds() const { return slot_s_; }
    std::size_t size() const;

    void save(const std::filesystem::path& dir) const;
    static HistoricalStore load(const std::filesystem::path& dir, double slot_s,
                                double tz_offset_s = 0.0);

private:
    double slot_s_;
    double tz_offset_s_;
    // day index -> slot -> observations in arrival order
    std::map<std::int64_t, std::map<std::int64_t, std::vector<core::Observation>>> days_;
};

// Observation JSON round-trip, shared by the store and tests.
std::string observation_to_json(const core::Observation& obs);
std::optional<core::Observation> observation_from_json(const std::string& line);

} // namespace linktt::io
