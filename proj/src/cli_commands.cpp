#include "linktt/cli/commands.hpp"

#include <atomic>
#include <span>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "linktt/core/ops.hpp"
#include "linktt/em/em.hpp"
#include "linktt/io/io.hpp"
#include "linktt/rng.hpp"
#include "linktt/stream/pipeline.hpp"

namespace linktt::cli {

using nlohmann::json;

namespace {

em::PriorFn make_prior_fn(const core::RoadNetwork& net, const core::PriorConfig& prior) {
    return [&net, prior](core::LinkIndex link) {
        const auto pm = core::prior_params(net.link(link), prior);
        return gamma::GammaParams::from_moments(pm.mean_s, pm.stddev_s);
    };
}

// Shared per-step EM driver: window assembly, em_iterate, estimate output,
// then archiving the batch into the historical store.
class EmDriver {
public:
    EmDriver(const core::RoadNetwork& net, const RunConfig& cfg, io::EstimateWriter& writer,
             stream::ThreadPool* pool)
        : cfg_(cfg),
          prior_(make_prior_fn(net, cfg.prior)),
          store_(cfg.em.time_step_s, cfg.tz_offset_s),
          writer_(writer),
          pool_(pool) {}

    void process_step(std::span<const core::Observation> batch, double t_step_end,
                      std::int64_t step_index) {
        auto window = em::assemble_window(batch, store_, t_step_end, cfg_.em, cfg_.decay);
        std::sort(window.begin(), window.end(),
                  [](const em::WeightedObservation& a, const em::WeightedObservation& b) {
                      if (a.obs.time != b.obs.time) return a.obs.time < b.obs.time;
                      return a.obs.id < b.obs.id;
                  });
        const std::uint64_t step_seed =
            combine_seed(cfg_.seed, static_cast<std::uint64_t>(step_index));
        state_ = em::em_iterate(window, state_, prior_, cfg_.em, t_step_end, step_seed, pool_);
        writer_.append(state_);
        for (const auto& obs : batch) store_.put(obs);
        ++steps_;
        observations_ += batch.size();
    }

    // engine path: consume the batch shard-wise without flattening first
    void process_step_sharded(const stream::MicroBatch<core::Observation>& batch) {
        shard_scratch_.clear();
        shard_scratch_.reserve(batch.record_count());
        for (const auto& shard : batch.shards)
            shard_scratch_.insert(shard_scratch_.end(), shard.begin(), shard.end());
        process_step(shard_scratch_,
                     batch.interval_start + batch.interval_length,
                     batch.interval_index);
    }

    const em::ModelState& state() const { return state_; }
    io::HistoricalStore& store() { return store_; }
    std::size_t steps() const { return steps_; }
    std::size_t observations() const { return observations_; }

private:
    const RunConfig& cfg_;
    em::PriorFn prior_;
    io::HistoricalStore store_;
    io::EstimateWriter& writer_;
    stream::ThreadPool* pool_;
    em::ModelState state_;
    std::vector<core::Observation> shard_scratch_;
    std::size_t steps_ = 0;
    std::size_t observations_ = 0;
};

std::size_t env_worker_override(std::size_t configured) {
    const char* env = std::getenv("LINKTT_WORKERS");
    if (!env || !*env) return configured;
    const long v = std::strtol(env, nullptr, 10);
    return v >= 1 ? static_cast<std::size_t>(v) : configured;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg) {
    auto data = eval::generate(cfg.synthetic);
    io::write_network(data.network, cfg.paths.network);

    // split held-out trips by id hash before any windowing
    const double holdout = cfg.holdout_fraction;
    std::vector<core::TrajectoryMeasurement> train;
    std::vector<eval::SyntheticTrip> held_out;
    for (auto& trip : data.trips) {
        const double u =
            static_cast<double>(mix64(fnv1a64(trip.measurement.id)) >> 11) * 0x1.0p-53;
        if (u < holdout)
            held_out.push_back(trip);
        else
            train.push_back(trip.measurement);
    }
    io::write_trajectories(train, cfg.paths.trajectories);

    std::vector<core::TrajectoryMeasurement> pieces;
    for (double mins : cfg.piece_lengths_min) {
        auto cut = eval::cut_trajectories(held_out, mins * 60.0, data.network);
        pieces.insert(pieces.end(), cut.begin(), cut.end());
    }
    io::write_trajectories(pieces, cfg.paths.eval_pieces);

    std::ofstream gt(cfg.paths.ground_truth_out);
    if (!gt) throw io::DataError("cannot write " + cfg.paths.ground_truth_out);
    gt << json{{"format_version", io::kFormatVersion}, {"type", "ground_truth"}}.dump() << "\n";
    for (std::size_t i = 0; i < data.network.size(); ++i) {
        const auto& p = data.ground_truth.at(static_cast<core::LinkIndex>(i));
        gt << json{{"link_id", data.network.link(static_cast<core::LinkIndex>(i)).id},
                   {"k", p.k},
                   {"theta", p.theta}}
                  .dump()
           << "\n";
    }
    std::cout << "simulate: " << data.network.size() << " links, " << train.size()
              << " training trips, " << pieces.size() << " held-out pieces\n";
    return kExitOk;
}

int cmd_run_offline(const RunConfig& cfg, RunSummary* summary) {
    const auto t_begin = std::chrono::steady_clock::now();
    auto net = io::load_network(cfg.paths.network);
    auto traj = io::read_trajectories(cfg.paths.trajectories);

    std::size_t rejected = traj.skipped_lines;
    std::vector<core::Observation> observations;
    observations.reserve(traj.records.size());
    for (const auto& t : traj.records) {
        if (auto obs = core::activation_vector(t, net))
            observations.push_back(std::move(*obs));
        else
            ++rejected;
    }

    io::EstimateWriter writer(cfg.paths.estimates_out, net);
    const std::size_t workers = env_worker_override(cfg.scheduler.workers);
    stream::ThreadPool pool(workers);
    EmDriver driver(net, cfg, writer, &pool);

    std::vector<stream::BatchMetrics> metrics;
    if (!observations.empty()) {
        const double step = cfg.em.time_step_s;
        const double t0 = std::floor(observations.front().time / step) * step;
        std::size_t i = 0;
        for (std::int64_t k = 0; i < observations.size(); ++k) {
            const double hi = t0 + static_cast<double>(k + 1) * step;
            std::vector<core::Observation> batch;
            while (i < observations.size() && observations[i].time < hi)
                batch.push_back(observations[i++]);
            const auto s0 = std::chrono::steady_clock::now();
            driver.process_step(batch, hi, k);
            const auto s1 = std::chrono::steady_clock::now();
            stream::BatchMetrics m;
            m.interval_index = k;
            m.interval_start = t0 + static_cast<double>(k) * step;
            m.records_in = batch.size();
            m.records_out = batch.size();
            m.processing_time_s = std::chrono::duration<double>(s1 - s0).count();
            m.deadline_missed = m.processing_time_s > cfg.scheduler.deadline_s;
            metrics.push_back(m);
        }
    }
    writer.close();
    io::write_metrics(metrics, cfg.paths.metrics_out);
    if (!cfg.paths.store_dir.empty()) driver.store().save(cfg.paths.store_dir);

    if (summary) {
        summary->steps = driver.steps();
        summary->observations = driver.observations();
        summary->rejected_records = rejected;
        summary->wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    }
    std::cout << "run-offline: " << driver.steps() << " steps, " << driver.observations()
              << " observations, " << rejected << " rejected\n";
    return kExitOk;
}

namespace {

struct StreamingOutcome {
    std::vector<stream::BatchMetrics> metrics;
    std::size_t steps = 0;
    std::size_t observations = 0;
    std::size_t rejected = 0;
};

// Builds and runs the estimation pipeline over a replay source. The EM update
// runs in the batch sink; its data parallelism uses the engine's pool.
StreamingOutcome run_streaming_pipeline(const core::RoadNetwork& net, const RunConfig& cfg,
                                        std::unique_ptr<stream::Source<core::TrajectoryMeasurement>> source,
                                        io::EstimateWriter& writer, double deadline_s) {
    stream::SchedulerConfig scfg = cfg.scheduler;
    scfg.interval_s = cfg.em.time_step_s;
    scfg.deadline_s = deadline_s;
    scfg.workers = env_worker_override(scfg.workers);

    stream::Pipeline pipe(scfg);
    EmDriver driver(net, cfg, writer, &pipe.pool());
    auto rejected = std::make_shared<std::atomic<std::size_t>>(0);

    auto trajectories = pipe.source(std::move(source),
                                    [](const core::TrajectoryMeasurement& t) {
                                        return stream::shard_hash(t.id);
                                    },
                                    "trajectories");
    auto observations = trajectories.flat_map(
        [&net, rejected](const core::TrajectoryMeasurement& t) {
            std::vector<core::Observation> out;
            if (auto obs = core::activation_vector(t, net))
                out.push_back(std::move(*obs));
            else
                rejected->fetch_add(1, std::memory_order_relaxed);
            return out;
        },
        "activation");
    observations.for_each_batch(
        [&driver](const stream::MicroBatch<core::Observation>& batch) {
            driver.process_step_sharded(batch);
        },
        "em_update");

    StreamingOutcome out;
    out.metrics = pipe.run();
    out.steps = driver.steps();
    out.observations = driver.observations();
    out.rejected = rejected->load();
    return out;
}

}  // namespace

int cmd_run_streaming(const RunConfig& cfg, RunSummary* summary) {
    const auto t_begin = std::chrono::steady_clock::now();
    auto net = io::load_network(cfg.paths.network);

    io::ReplaySource rsrc{cfg.paths.trajectories, 1.0, cfg.em.time_step_s};
    io::EstimateWriter writer(cfg.paths.estimates_out, net);
    auto outcome = run_streaming_pipeline(net, cfg, io::make_replay_source(rsrc), writer,
                                          cfg.scheduler.deadline_s);
    writer.close();
    io::write_metrics(outcome.metrics, cfg.paths.metrics_out);

    std::size_t misses = 0;
    for (const auto& m : outcome.metrics) misses += m.deadline_missed ? 1 : 0;
    if (summary) {
        summary->steps = outcome.steps;
        summary->observations = outcome.observations;
        summary->rejected_records = outcome.rejected;
        summary->deadline_misses = misses;
        summary->wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    }
    std::cout << "run-streaming: " << outcome.steps << " intervals, " << outcome.observations
              << " observations, " << outcome.rejected << " rejected, " << misses
              << " deadline misses\n";
    return kExitOk;
}

namespace {

em::ModelState state_from_estimates(const std::string& path, const core::RoadNetwork& net) {
    em::ModelState state;
    for (const auto& r : io::read_estimates(path)) {
        const core::LinkIndex idx = net.index_of(r.link_id);
        if (idx < 0) throw io::DataError("estimate link '" + r.link_id + "' not in network");
        state.params[idx] = em::LinkState{gamma::GammaParams{r.k, r.theta}, r.n_effective};
        state.time_index = std::max(state.time_index, r.time);
    }
    return state;
}

}  // namespace

int cmd_evaluate(const RunConfig& cfg) {
    auto net = io::load_network(cfg.paths.network);
    auto pieces = io::read_trajectories(cfg.paths.eval_pieces);
    const auto state = state_from_estimates(cfg.paths.estimates_out, net);

    auto report = eval::evaluate(state, net, pieces.records, cfg.em.series);
    eval::write_report_json(report, cfg.paths.report_json);
    eval::write_report_csv(report, cfg.paths.report_csv);
    std::cout << "evaluate: " << report.evaluated << " pieces scored, "
              << report.excluded_missing_params << " excluded (missing params), "
              << report.excluded_out_of_range << " out of range\n";

    if (!cfg.paths.compare_estimates.empty()) {
        const auto other = state_from_estimates(cfg.paths.compare_estimates, net);
        auto other_report = eval::evaluate(other, net, pieces.records, cfg.em.series);
        const std::string cmp_path = cfg.paths.report_csv + ".compare.csv";
        std::ofstream out(cmp_path);
        out << "bucket,metric,primary,secondary\n";
        for (std::size_t i = 0; i < report.buckets.size(); ++i) {
            const auto& a = report.buckets[i];
            const auto& b = other_report.buckets[i];
            out << a.lo_min << "-" << a.hi_min << "min,l1," << a.l1_mean << "," << b.l1_mean
                << "\n";
            out << a.lo_min << "-" << a.hi_min << "min,rmse," << a.rmse << "," << b.rmse << "\n";
            out << a.lo_min << "-" << a.hi_min << "min,log_lik," << a.log_lik_mean << ","
                << b.log_lik_mean << "\n";
        }
        std::cout << "evaluate: comparison table written to " << cmp_path << "\n";
    }
    return kExitOk;
}

int cmd_bench(const RunConfig& cfg, BenchResult* result) {
    auto net = io::load_network(cfg.paths.network);
    auto traj = io::read_trajectories(cfg.paths.trajectories);
    if (traj.records.empty()) throw io::DataError("bench: no trajectories");

    // restrict to the configured horizon of data time
    const double t0 = traj.records.front().start_time;
    std::vector<core::TrajectoryMeasurement> horizon;
    for (const auto& t : traj.records)
        if (t.start_time < t0 + cfg.bench_horizon_s) horizon.push_back(t);
    double data_seconds = cfg.bench_horizon_s;

    auto probe = [&](double rate) {
        // at rate r the wall budget per interval shrinks to interval / r
        io::EstimateWriter writer("/dev/null", net);
        auto outcome = run_streaming_pipeline(
            net, cfg, io::make_replay_source(horizon, cfg.em.time_step_s), writer,
            cfg.em.time_step_s / rate);
        std::size_t misses = 0;
        for (const auto& m : outcome.metrics) misses += m.deadline_missed ? 1 : 0;
        return misses;
    };

    BenchResult bench;
    double lo = 0.0, hi = 0.0;
    double rate = 1.0;
    for (int i = 0; i < 14; ++i) {
        ++bench.probes;
        if (probe(rate) == 0) {
            lo = rate;
            rate *= 2.0;
        } else {
            hi = rate;
            break;
        }
    }
    if (hi == 0.0) hi = rate;
    if (lo == 0.0) {
        // even rate 1 misses; search downward
        rate = 0.5;
        for (int i = 0; i < 14 && lo == 0.0; ++i, rate *= 0.5) {
            ++bench.probes;
            if (probe(rate) == 0)
                lo = rate;
            else
                hi = rate;
        }
    }
    for (int i = 0; i < 5 && lo > 0.0 && hi / lo > 1.1; ++i) {
        const double mid = std::sqrt(lo * hi);
        ++bench.probes;
        if (probe(mid) == 0)
            lo = mid;
        else
            hi = mid;
    }

    const double obs_per_data_second = static_cast<double>(horizon.size()) / data_seconds;
    bench.best_rate = lo;
    bench.first_failing_rate = hi;
    bench.capacity_obs_per_s = lo * obs_per_data_second;
    if (result) *result = bench;

    std::ofstream out(cfg.paths.metrics_out);
    out << json{{"format_version", io::kFormatVersion}, {"type", "bench"}}.dump() << "\n";
    out << json{{"capacity_obs_per_s", bench.capacity_obs_per_s},
                {"best_rate", bench.best_rate},
                {"first_failing_rate", bench.first_failing_rate},
                {"probes", bench.probes},
                {"horizon_records", horizon.size()},
                {"workers", env_worker_override(cfg.scheduler.workers)}}
               .dump()
        << "\n";
    std::cout << "bench: capacity " << bench.capacity_obs_per_s << " obs/s (rate " << lo << "-"
              << hi << ", " << bench.probes << " probes)\n";
    return kExitOk;
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"linktt: streaming link travel-time estimation"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::string profile;

    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--profile", profile,
                   "preset: SlidingBig | SlidingBig1 | SlidingBig2 | SlidingBig3 | "
                   "SlidingBig4 | Streaming5s");
    app.add_option("--seed", cfg.seed, "global random seed")->capture_default_str();

    auto* paths = app.add_option_group("paths");
    paths->add_option("--network", cfg.paths.network, "road network CSV");
    paths->add_option("--trajectories", cfg.paths.trajectories, "trajectory JSONL");
    paths->add_option("--estimates-out", cfg.paths.estimates_out, "estimate output JSONL")
        ->capture_default_str();
    paths->add_option("--metrics-out", cfg.paths.metrics_out, "metrics output JSONL")
        ->capture_default_str();
    paths->add_option("--store-dir", cfg.paths.store_dir, "historical store directory");
    paths->add_option("--report-json", cfg.paths.report_json, "evaluation report JSON")
        ->capture_default_str();
    paths->add_option("--report-csv", cfg.paths.report_csv, "evaluation report CSV")
        ->capture_default_str();
    paths->add_option("--ground-truth-out", cfg.paths.ground_truth_out,
                      "simulated ground truth JSONL")
        ->capture_default_str();
    paths->add_option("--eval-pieces", cfg.paths.eval_pieces, "held-out pieces JSONL")
        ->capture_default_str();
    paths->add_option("--compare-estimates", cfg.paths.compare_estimates,
                      "second estimate file for comparison");

    auto* emg = app.add_option_group("em");
    emg->add_option("--samples", cfg.em.num_samples, "E-step samples per observation (10-100)")
        ->capture_default_str();
    emg->add_option("--iterations", cfg.em.num_iterations, "EM iterations per step (1-5)")
        ->capture_default_str();
    emg->add_option("--weeks-lookback", cfg.em.weeks_lookback, "weeks of history (1-10)")
        ->capture_default_str();
    emg->add_option("--day-window-s", cfg.em.day_window_s, "same-day window seconds")
        ->capture_default_str();
    emg->add_option("--time-step-s", cfg.em.time_step_s, "time step seconds")
        ->capture_default_str();
    emg->add_option("--prior-strength", cfg.em.prior_strength, "prior pseudo-sample weight")
        ->capture_default_str();
    emg->add_option("--min-ess", cfg.em.min_ess, "minimum effective sample size for data fits")
        ->capture_default_str();
    emg->add_flag("--paper-faithful-sampling", cfg.em.paper_faithful_sampling,
                  "disable the importance correction of E-step weights");
    emg->add_option("--series-rel-tol", cfg.em.series.rel_tol, "series truncation tolerance")
        ->capture_default_str();
    emg->add_option("--series-max-terms", cfg.em.series.max_terms, "series term cap")
        ->capture_default_str();

    auto* dec = app.add_option_group("decay");
    dec->add_option("--terminal-weight", cfg.decay.terminal_weight,
                    "decay weight at the window edge")
        ->capture_default_str();
    dec->add_option("--tz-offset-s", cfg.tz_offset_s, "local timezone offset seconds")
        ->capture_default_str();

    auto* pri = app.add_option_group("prior");
    pri->add_option("--prior-speed-fraction", cfg.prior.speed_fraction,
                    "prior mean speed as a fraction of the limit")
        ->capture_default_str();
    pri->add_option("--prior-min-stddev-s", cfg.prior.min_stddev_s, "prior stddev floor seconds")
        ->capture_default_str();
    pri->add_option("--prior-stddev-fraction", cfg.prior.stddev_fraction,
                    "prior stddev as a fraction of the mean")
        ->capture_default_str();

    auto* sch = app.add_option_group("scheduler");
    sch->add_option("--workers", cfg.scheduler.workers,
                    "worker threads (env LINKTT_WORKERS overrides)")
        ->capture_default_str();
    sch->add_option("--shards", cfg.scheduler.shards, "batch shard count")
        ->capture_default_str();
    sch->add_option("--deadline-s", cfg.scheduler.deadline_s, "per-interval deadline seconds")
        ->capture_default_str();
    sch->add_option("--retain-intervals", cfg.scheduler.retain_intervals,
                    "batches retained per node (<0 keeps all)")
        ->capture_default_str();

    auto* syn = app.add_option_group("synthetic");
    syn->add_option("--n-links", cfg.synthetic.n_links, "links in the synthetic network")
        ->capture_default_str();
    syn->add_option("--trips-per-hour", cfg.synthetic.trips_per_hour, "synthetic trip rate")
        ->capture_default_str();
    syn->add_option("--horizon-hours", cfg.synthetic.horizon_hours, "synthetic horizon hours")
        ->capture_default_str();
    syn->add_option("--trip-links-min", cfg.synthetic.trip_links_min, "min links per trip")
        ->capture_default_str();
    syn->add_option("--trip-links-max", cfg.synthetic.trip_links_max, "max links per trip")
        ->capture_default_str();
    syn->add_option("--correlation", cfg.synthetic.correlation,
                    "inter-link correlation strength (0 = independent)")
        ->capture_default_str();
    syn->add_option("--synthetic-seed", cfg.synthetic.seed, "generator seed")
        ->capture_default_str();

    auto* ev = app.add_option_group("eval");
    ev->add_option("--holdout-fraction", cfg.holdout_fraction, "held-out trip fraction")
        ->capture_default_str();
    ev->add_option("--piece-lengths-min", cfg.piece_lengths_min,
                   "piece lengths in minutes for trajectory cutting")
        ->capture_default_str();
    ev->add_option("--bench-horizon-s", cfg.bench_horizon_s, "bench probe horizon seconds")
        ->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
    auto* run_offline = app.add_subcommand("run-offline", "batch EM over a trajectory file");
    auto* run_streaming =
        app.add_subcommand("run-streaming", "online EM through the micro-batch engine");
    auto* evaluate = app.add_subcommand("evaluate", "score held-out pieces against estimates");
    auto* bench = app.add_subcommand("bench", "measure maximum sustainable observation rate");
    for (auto* sub : {simulate, run_offline, run_streaming, evaluate, bench})
        sub->fallthrough();

    std::vector<const char*> argv;
    argv.push_back("linktt");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        // precedence: defaults < config file < profile < explicit CLI options;
        // the option bindings point into cfg, so rebuilding its value and
        // re-parsing lays the CLI values on top
        RunConfig base;
        if (!config_path.empty()) base = load_config_file(config_path);
        if (!profile.empty()) apply_profile(base, profile);
        cfg = base;
        app.clear();
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            return app.exit(e) == 0 ? kExitOk : kExitConfigError;
        }
        cfg.finalize_and_validate();

        if (simulate->parsed()) return cmd_simulate(cfg);
        if (run_offline->parsed()) return cmd_run_offline(cfg);
        if (run_streaming->parsed()) return cmd_run_streaming(cfg);
        if (evaluate->parsed()) return cmd_evaluate(cfg);
        if (bench->parsed()) return cmd_bench(cfg);
        return kExitConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const io::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}

} // namespace linktt::cli
