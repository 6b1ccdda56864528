#include "linktt/cli/config.hpp"

#include <fstream>

#include <json.hpp>

namespace linktt::cli {

using nlohmann::json;

void RunConfig::finalize_and_validate() {
    decay.day_window_s = em.day_window_s;
    decay.week_window_count = em.weeks_lookback;
    if (scheduler.interval_s <= 0.0) scheduler.interval_s = em.time_step_s;
    if (scheduler.deadline_s <= 0.0) scheduler.deadline_s = scheduler.interval_s;

    try {
        em.check();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("em: ") + e.what());
    }
    try {
        decay.check();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("decay: ") + e.what());
    }
    try {
        scheduler.check();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("scheduler: ") + e.what());
    }
    try {
        synthetic.check();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("synthetic: ") + e.what());
    }
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw ConfigError("holdout_fraction: must be in [0,1)");
    if (piece_lengths_min.empty()) throw ConfigError("piece_lengths_min: must not be empty");
    for (double p : piece_lengths_min)
        if (!(p > 0.0)) throw ConfigError("piece_lengths_min: entries must be > 0");
    if (!(bench_horizon_s > 0.0)) throw ConfigError("bench_horizon_s: must be > 0");
}

void apply_profile(RunConfig& cfg, const std::string& name) {
    auto sliding_big = [&] {
        cfg.em.weeks_lookback = 10;
        cfg.em.day_window_s = 2.0 * 3600.0;
        cfg.em.num_samples = 100;
        cfg.em.num_iterations = 5;
        cfg.em.time_step_s = 20.0 * 60.0;
    };
    if (name == "SlidingBig") {
        sliding_big();
    } else if (name == "SlidingBig1") {
        sliding_big();
        cfg.em.day_window_s = 40.0 * 60.0;
    } else if (name == "SlidingBig2") {
        sliding_big();
        cfg.em.weeks_lookback = 1;  // ten days of history
    } else if (name == "SlidingBig3") {
        sliding_big();
        cfg.em.num_iterations = 1;
        cfg.em.time_step_s = 4.0 * 60.0;
    } else if (name == "SlidingBig4") {
        sliding_big();
        cfg.em.num_samples = 10;
    } else if (name == "Streaming5s") {
        cfg.em.weeks_lookback = 1;
        cfg.em.day_window_s = 20.0 * 60.0;
        cfg.em.num_samples = 10;
        cfg.em.num_iterations = 1;
        cfg.em.time_step_s = 5.0;
    } else {
        throw ConfigError("unknown profile '" + name + "'");
    }
    cfg.profile = name;
}

std::vector<std::string> profile_names() {
    return {"SlidingBig", "SlidingBig1", "SlidingBig2", "SlidingBig3", "SlidingBig4",
            "Streaming5s"};
}

namespace {

template <class T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for '") + key + "'");
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown config key '" + scope + it.key() + "'");
    }
}

}  // namespace

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");

    check_keys(j,
               {"format_version", "seed", "profile", "paths", "em", "series", "decay", "prior",
                "scheduler", "synthetic", "tz_offset_s", "holdout_fraction",
                "piece_lengths_min", "bench_horizon_s"},
               "");

    RunConfig cfg;
    std::string profile;
    read_field(j, "profile", profile);
    if (!profile.empty()) apply_profile(cfg, profile);
    read_field(j, "seed", cfg.seed);
    read_field(j, "tz_offset_s", cfg.tz_offset_s);
    read_field(j, "holdout_fraction", cfg.holdout_fraction);
    read_field(j, "piece_lengths_min", cfg.piece_lengths_min);
    read_field(j, "bench_horizon_s", cfg.bench_horizon_s);

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        check_keys(p,
                   {"network", "trajectories", "estimates_out", "metrics_out", "store_dir",
                    "report_json", "report_csv", "ground_truth_out", "eval_pieces",
                    "compare_estimates"},
                   "paths.");
        read_field(p, "network", cfg.paths.network);
        read_field(p, "trajectories", cfg.paths.trajectories);
        read_field(p, "estimates_out", cfg.paths.estimates_out);
        read_field(p, "metrics_out", cfg.paths.metrics_out);
        read_field(p, "store_dir", cfg.paths.store_dir);
        read_field(p, "report_json", cfg.paths.report_json);
        read_field(p, "report_csv", cfg.paths.report_csv);
        read_field(p, "ground_truth_out", cfg.paths.ground_truth_out);
        read_field(p, "eval_pieces", cfg.paths.eval_pieces);
        read_field(p, "compare_estimates", cfg.paths.compare_estimates);
    }
    if (j.contains("em")) {
        const auto& e = j.at("em");
        check_keys(e,
                   {"num_samples", "num_iterations", "weeks_lookback", "day_window_s",
                    "time_step_s", "prior_strength", "min_ess", "paper_faithful_sampling"},
                   "em.");
        read_field(e, "num_samples", cfg.em.num_samples);
        read_field(e, "num_iterations", cfg.em.num_iterations);
        read_field(e, "weeks_lookback", cfg.em.weeks_lookback);
        read_field(e, "day_window_s", cfg.em.day_window_s);
        read_field(e, "time_step_s", cfg.em.time_step_s);
        read_field(e, "prior_strength", cfg.em.prior_strength);
        read_field(e, "min_ess", cfg.em.min_ess);
        read_field(e, "paper_faithful_sampling", cfg.em.paper_faithful_sampling);
    }
    if (j.contains("series")) {
        const auto& s = j.at("series");
        check_keys(s, {"rel_tol", "max_terms"}, "series.");
        read_field(s, "rel_tol", cfg.em.series.rel_tol);
        read_field(s, "max_terms", cfg.em.series.max_terms);
    }
    if (j.contains("decay")) {
        const auto& d = j.at("decay");
        check_keys(d, {"terminal_weight"}, "decay.");
        read_field(d, "terminal_weight", cfg.decay.terminal_weight);
    }
    if (j.contains("prior")) {
        const auto& p = j.at("prior");
        check_keys(p, {"speed_fraction", "min_stddev_s", "stddev_fraction"}, "prior.");
        read_field(p, "speed_fraction", cfg.prior.speed_fraction);
        read_field(p, "min_stddev_s", cfg.prior.min_stddev_s);
        read_field(p, "stddev_fraction", cfg.prior.stddev_fraction);
    }
    if (j.contains("scheduler")) {
        const auto& s = j.at("scheduler");
        check_keys(s, {"interval_s", "deadline_s", "workers", "shards", "retain_intervals"},
                   "scheduler.");
        read_field(s, "interval_s", cfg.scheduler.interval_s);
        read_field(s, "deadline_s", cfg.scheduler.deadline_s);
        read_field(s, "workers", cfg.scheduler.workers);
        read_field(s, "shards", cfg.scheduler.shards);
        read_field(s, "retain_intervals", cfg.scheduler.retain_intervals);
    }
    if (j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        check_keys(s,
                   {"n_links", "length_min_m", "length_max_m", "speed_limits_mps", "shape_min",
                    "shape_max", "congestion_min", "congestion_max", "trips_per_hour",
                    "trip_links_min", "trip_links_max", "horizon_hours", "start_time",
                    "correlation", "seed"},
                   "synthetic.");
        read_field(s, "n_links", cfg.synthetic.n_links);
        read_field(s, "length_min_m", cfg.synthetic.length_min_m);
        read_field(s, "length_max_m", cfg.synthetic.length_max_m);
        read_field(s, "speed_limits_mps", cfg.synthetic.speed_limits_mps);
        read_field(s, "shape_min", cfg.synthetic.shape_min);
        read_field(s, "shape_max", cfg.synthetic.shape_max);
        read_field(s, "congestion_min", cfg.synthetic.congestion_min);
        read_field(s, "congestion_max", cfg.synthetic.congestion_max);
        read_field(s, "trips_per_hour", cfg.synthetic.trips_per_hour);
        read_field(s, "trip_links_min", cfg.synthetic.trip_links_min);
        read_field(s, "trip_links_max", cfg.synthetic.trip_links_max);
        read_field(s, "horizon_hours", cfg.synthetic.horizon_hours);
        read_field(s, "start_time", cfg.synthetic.start_time);
        read_field(s, "correlation", cfg.synthetic.correlation);
        read_field(s, "seed", cfg.synthetic.seed);
    }
    return cfg;
}

} // namespace linktt::cli
