#include "linktt/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace linktt::core {

namespace {
constexpr double kMinActivationMass = 1e-6;
constexpr double kSecondsPerWeek = 7.0 * 86400.0;
}  // namespace

const char* reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::None: return "none";
        case RejectReason::UnknownLink: return "unknown_link";
        case RejectReason::DuplicateLink: return "duplicate_link";
        case RejectReason::EmptyPath: return "empty_path";
        case RejectReason::BadDuration: return "bad_duration";
        case RejectReason::BadOffsets: return "bad_offsets";
        case RejectReason::DegenerateSpan: return "degenerate_span";
        case RejectReason::NegligibleMass: return "negligible_mass";
    }
    return "unknown";
}

std::optional<Observation> activation_vector(const TrajectoryMeasurement& traj,
                                             const RoadNetwork& net,
                                             RejectReason* why) {
    auto reject = [&](RejectReason r) -> std::optional<Observation> {
        if (why) *why = r;
        return std::nullopt;
    };
    if (why) *why = RejectReason::None;

    const std::size_t m = traj.path.size();
    if (m == 0) return reject(RejectReason::EmptyPath);
    if (!(traj.duration_s > 0.0)) return reject(RejectReason::BadDuration);

    std::vector<LinkIndex> indices(m);
    std::unordered_set<LinkIndex> seen;
    for (std::size_t i = 0; i < m; ++i) {
        indices[i] = net.index_of(traj.path[i]);
        if (indices[i] < 0) return reject(RejectReason::UnknownLink);
        if (!seen.insert(indices[i]).second) return reject(RejectReason::DuplicateLink);
    }

    const double len_first = net.link(indices.front()).length_m;
    const double len_last = net.link(indices.back()).length_m;
    if (traj.offset_start_m < 0.0 || traj.offset_start_m > len_first ||
        traj.offset_end_m < 0.0 || traj.offset_end_m > len_last)
        return reject(RejectReason::BadOffsets);

    Observation obs;
    obs.id = traj.id;
    obs.duration_s = traj.duration_s;
    obs.time = traj.start_time;
    obs.weights.reserve(m);

    if (m == 1) {
        if (traj.offset_end_m <= traj.offset_start_m)
            return reject(RejectReason::DegenerateSpan);
        const double a = (traj.offset_end_m - traj.offset_start_m) / len_first;
        obs.weights.emplace_back(indices[0], a);
    } else {
        const double a_first = 1.0 - traj.offset_start_m / len_first;
        if (a_first > 0.0) obs.weights.emplace_back(indices.front(), a_first);
        for (std::size_t i = 1; i + 1 < m; ++i) obs.weights.emplace_back(indices[i], 1.0);
        const double a_last = traj.offset_end_m / len_last;
        if (a_last > 0.0) obs.weights.emplace_back(indices.back(), a_last);
    }

    double mass = 0.0;
    for (const auto& [idx, a] : obs.weights) mass += a;
    if (mass < kMinActivationMass) return reject(RejectReason::NegligibleMass);
    return obs;
}

double decay_weight_parts(double day_age_s, int week_offset, const DecayConfig& cfg) {
    cfg.check();
    if (day_age_s < 0.0 || week_offset < 0)
        throw std::domain_error("decay_weight: negative age");
    const double log_terminal = std::log(cfg.terminal_weight);
    const double log_w = log_terminal * (day_age_s / cfg.day_window_s) +
                         log_terminal * (static_cast<double>(week_offset) /
                                         static_cast<double>(cfg.week_window_count));
    return std::exp(log_w);
}

double decay_weight(double obs_time, double current_time, const DecayConfig& cfg) {
    if (obs_time > current_time)
        throw std::domain_error("decay_weight: observation is in the future");
    const double age = current_time - obs_time;
    const int weeks = static_cast<int>(std::floor(age / kSecondsPerWeek));
    const double day_age = age - weeks * kSecondsPerWeek;
    return decay_weight_parts(day_age, weeks, cfg);
}

PriorMoments prior_params(const Link& link, const PriorConfig& cfg) {
    link.check();
    PriorMoments pm;
    pm.mean_s = link.length_m / (cfg.speed_fraction * link.speed_limit_mps);
    pm.stddev_s = std::max(cfg.min_stddev_s, cfg.stddev_fraction * pm.mean_s);
    return pm;
}

} // namespace linktt::core
