#pragma once

#include <optional>

#include "linktt/core/types.hpp"

namespace linktt::core {

enum class RejectReason {
    None,
    UnknownLink,
    DuplicateLink,
    EmptyPath,
    BadDuration,
    BadOffsets,
    DegenerateSpan,  // single-link path with o_end <= o_start
    NegligibleMass,  // total activation below 1e-6
};

const char* reject_reason_name(RejectReason r);

// Converts a trajectory measurement into a sparse activation observation:
// alpha(l_1) = 1 - o_start/L(l_1), alpha(l_m) = o_end/L(l_m), interior links 1.
// A single-link reading uses (o_end - o_start)/L. Zero entries are dropped.
// Malformed records are rejected, not fatal: returns nullopt and sets *why.
std::optional<Observation> activation_vector(const TrajectoryMeasurement& traj,
                                             const RoadNetwork& net,
                                             RejectReason* why = nullptr);

// Decay factor in (0,1] for an observation of age current_time - obs_time.
// The age is split into whole weeks and a same-day remainder; each part decays
// exponentially, reaching cfg.terminal_weight at the edge of its window.
// Throws if obs_time > current_time.
double decay_weight(double obs_time, double current_time, const DecayConfig& cfg);

// Same split, exposed for window assembly: weeks of age and remainder seconds.
double decay_weight_parts(double day_age_s, int week_offset, const DecayConfig& cfg);

// Prior travel-time moments for a link: mean assumes cfg.speed_fraction of the
// speed limit; stddev is max(cfg.min_stddev_s, cfg.stddev_fraction * mean).
struct PriorMoments {
    double mean_s = 0.0;
    double stddev_s = 0.0;
};
PriorMoments prior_params(const Link& link, const PriorConfig& cfg);

} // namespace linktt::core
