#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linktt/core/types.hpp"
#include "linktt/em/types.hpp"
#include "linktt/gamma/params.hpp"
#include "linktt/stream/pool.hpp"

namespace linktt::eval {

// Synthetic ground truth: stands in for field data. Trips walk random link
// sequences; per-link travel times are drawn from per-link Gamma ground truth;
// the observed duration is exactly the activation-weighted sum of the draws.
struct SyntheticSpec {
    int n_links = 100;
    double length_min_m = 400.0;
    double length_max_m = 650.0;
    std::vector<double> speed_limits_mps = {11.11, 13.89};
    double shape_min = 16.0;
    double shape_max = 28.0;
    // ground-truth mean = congestion_factor * length / speed_limit
    double congestion_min = 1.35;
    double congestion_max = 1.85;
    double trips_per_hour = 1200.0;
    int trip_links_min = 1;
    int trip_links_max = 3;
    double horizon_hours = 2.0;
    double start_time = 1577836800.0;  // 2020-01-01 00:00 UTC
    // > 0 injects a shared per-trip factor Gamma(1/c, c), c = correlation,
    // multiplying every link time of the trip (mean one)
    double correlation = 0.0;
    std::uint64_t seed = 1;

    void check() const;
};

struct SyntheticTrip {
    core::TrajectoryMeasurement measurement;
    std::vector<double> link_times_s;  // per path link, full-link travel times
};

struct SyntheticData {
    core::RoadNetwork network;
    std::vector<SyntheticTrip> trips;
    gamma::ParamMap ground_truth;  // by dense link index
};

SyntheticData generate(const SyntheticSpec& spec);

// Cuts trajectories into consecutive non-overlapping pieces of exactly
// piece_s seconds each (remainder discarded), using the per-link times to
// place cut offsets proportionally within links. Each piece becomes an
// independent measurement with id "<trip>#<i>".
std::vector<core::TrajectoryMeasurement> cut_trajectories(
    const std::vector<SyntheticTrip>& trips, double piece_s,
    const core::RoadNetwork& net);

struct BucketStats {
    double lo_min = 0.0;  // bucket edges, minutes of observed duration
    double hi_min = 0.0;
    std::size_t count = 0;
    double l1_mean = 0.0, l1_ci = 0.0;
    double l1_rel_mean = 0.0, l1_rel_ci = 0.0;  // per second of travel
    double rmse = 0.0, rmse_ci_low = 0.0, rmse_ci_high = 0.0;
    double log_lik_mean = 0.0, log_lik_ci = 0.0;
    // log-likelihood plus half the log predicted variance; duration-free for
    // a well-specified model
    double norm_log_lik_mean = 0.0, norm_log_lik_ci = 0.0;
};

struct EvalReport {
    std::vector<BucketStats> buckets;
    std::size_t evaluated = 0;
    std::size_t excluded_missing_params = 0;  // pieces over links without parameters
    std::size_t excluded_out_of_range = 0;
};

// Buckets by observed duration, minutes: [1,3), [3,7), [7,14), [14,30].
std::vector<std::pair<double, double>> default_duration_buckets();

// Scores held-out pieces against a model state: predicted mean is
// sum alpha_l k_l theta_l, L1/L2 against the observed duration, log-likelihood
// through the path density. 95% CIs by normal approximation. Piece scoring is
// parallel over fixed chunks when a pool is supplied; the report assembly is a
// single-threaded reduction.
EvalReport evaluate(const em::ModelState& model, const core::RoadNetwork& net,
                    const std::vector<core::TrajectoryMeasurement>& pieces,
                    const gamma::SeriesConfig& cfg = {},
                    stream::ThreadPool* pool = nullptr);

void write_report_json(const EvalReport& report, const std::string& path);
void write_report_csv(const EvalReport& report, const std::string& path);

} // namespace linktt::eval
