#include "linktt/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "linktt/core/ops.hpp"
#include "linktt/gamma/path_likelihood.hpp"
#include "linktt/rng.hpp"

namespace linktt::eval {

void SyntheticSpec::check() const {
    if (n_links < 1) throw std::domain_error("SyntheticSpec: n_links must be >= 1");
    if (!(length_min_m > 0.0) || length_max_m < length_min_m)
        throw std::domain_error("SyntheticSpec: bad length range");
    if (speed_limits_mps.empty()) throw std::domain_error("SyntheticSpec: no speed limits");
    if (!(shape_min > 0.0) || shape_max < shape_min)
        throw std::domain_error("SyntheticSpec: bad shape range");
    if (trip_links_min < 1 || trip_links_max < trip_links_min)
        throw std::domain_error("SyntheticSpec: bad trip length range");
    if (!(trips_per_hour > 0.0) || !(horizon_hours > 0.0))
        throw std::domain_error("SyntheticSpec: bad trip rate or horizon");
    if (correlation < 0.0) throw std::domain_error("SyntheticSpec: correlation must be >= 0");
}

SyntheticData generate(const SyntheticSpec& spec) {
    spec.check();
    Rng rng(mix64(spec.seed));

    SyntheticData data;
    std::vector<core::Link> links(static_cast<std::size_t>(spec.n_links));
    char idbuf[32];
    for (int i = 0; i < spec.n_links; ++i) {
        auto& l = links[static_cast<std::size_t>(i)];
        std::snprintf(idbuf, sizeof(idbuf), "L%05d", i);
        l.id = idbuf;
        l.from_node = "n" + std::to_string(i);
        l.to_node = "n" + std::to_string(i + 1);
        l.length_m = spec.length_min_m + (spec.length_max_m - spec.length_min_m) * rng.uniform();
        l.speed_limit_mps =
            spec.speed_limits_mps[rng.uniform_index(spec.speed_limits_mps.size())];

        const double congestion =
            spec.congestion_min + (spec.congestion_max - spec.congestion_min) * rng.uniform();
        const double mean_s = congestion * l.length_m / l.speed_limit_mps;
        const double shape =
            spec.shape_min + (spec.shape_max - spec.shape_min) * rng.uniform();
        data.ground_truth.emplace(static_cast<core::LinkIndex>(i),
                                  gamma::GammaParams{shape, mean_s / shape});
    }
    data.network = core::RoadNetwork(std::move(links));

    const std::size_t n_trips = static_cast<std::size_t>(
        std::llround(spec.trips_per_hour * spec.horizon_hours));
    const double horizon_s = spec.horizon_hours * 3600.0;
    data.trips.reserve(n_trips);

    std::vector<double> start_times(n_trips);
    for (auto& t : start_times) t = spec.start_time + rng.uniform() * horizon_s;
    std::sort(start_times.begin(), start_times.end());

    for (std::size_t t = 0; t < n_trips; ++t) {
        SyntheticTrip trip;
        auto& m = trip.measurement;
        std::snprintf(idbuf, sizeof(idbuf), "trip%07zu", t);
        m.id = idbuf;
        m.start_time = start_times[t];

        const int span = spec.trip_links_max - spec.trip_links_min + 1;
        const int m_links = std::min(
            spec.n_links, spec.trip_links_min +
                              static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(span))));
        // distinct random links; the estimator never reads topology, and
        // varied co-occurrence is what identifies the per-link parameters
        std::vector<int> chosen;
        while (static_cast<int>(chosen.size()) < m_links) {
            const int cand = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(spec.n_links)));
            if (std::find(chosen.begin(), chosen.end(), cand) == chosen.end())
                chosen.push_back(cand);
        }
        for (int link : chosen) m.path.push_back(data.network.link(link).id);

        const double corr_factor =
            spec.correlation > 0.0
                ? rng.gamma(1.0 / spec.correlation, spec.correlation)
                : 1.0;
        trip.link_times_s.reserve(m.path.size());
        for (const auto& lid : m.path) {
            const core::LinkIndex idx = data.network.index_of(lid);
            const auto& gt = data.ground_truth.at(idx);
            trip.link_times_s.push_back(corr_factor * rng.gamma(gt.k, gt.theta));
        }

        const double len_first = data.network.link(data.network.index_of(m.path.front())).length_m;
        const double len_last = data.network.link(data.network.index_of(m.path.back())).length_m;
        if (m.path.size() == 1) {
            const double a = 0.3 + 0.7 * rng.uniform();  // covered fraction
            const double lo = (1.0 - a) * rng.uniform();
            m.offset_start_m = lo * len_first;
            m.offset_end_m = (lo + a) * len_first;
            m.duration_s = a * trip.link_times_s[0];
        } else {
            m.offset_start_m = 0.8 * rng.uniform() * len_first;
            m.offset_end_m = (0.2 + 0.8 * rng.uniform()) * len_last;
            const double a_first = 1.0 - m.offset_start_m / len_first;
            const double a_last = m.offset_end_m / len_last;
            double d = a_first * trip.link_times_s.front() + a_last * trip.link_times_s.back();
            for (std::size_t j = 1; j + 1 < trip.link_times_s.size(); ++j)
                d += trip.link_times_s[j];
            m.duration_s = d;
        }
        data.trips.push_back(std::move(trip));
    }
    return data;
}

std::vector<core::TrajectoryMeasurement> cut_trajectories(
    const std::vector<SyntheticTrip>& trips, double piece_s,
    const core::RoadNetwork& net) {
    if (!(piece_s > 0.0)) throw std::domain_error("cut_trajectories: piece length must be > 0");
    std::vector<core::TrajectoryMeasurement> pieces;

    for (const auto& trip : trips) {
        const auto& m = trip.measurement;
        const std::size_t n = m.path.size();

        // covered time span of each link and the link fraction it maps onto;
        // partial first/last links follow the proportional-offset assumption
        std::vector<double> span(n), frac_lo(n, 0.0), frac_hi(n, 1.0);
        std::vector<double> length(n);
        for (std::size_t i = 0; i < n; ++i)
            length[i] = net.link(net.index_of(m.path[i])).length_m;
        if (n == 1) {
            frac_lo[0] = m.offset_start_m / length[0];
            frac_hi[0] = m.offset_end_m / length[0];
            span[0] = (frac_hi[0] - frac_lo[0]) * trip.link_times_s[0];
        } else {
            frac_lo[0] = m.offset_start_m / length[0];
            frac_hi[n - 1] = m.offset_end_m / length[n - 1];
            for (std::size_t i = 0; i < n; ++i)
                span[i] = (frac_hi[i] - frac_lo[i]) * trip.link_times_s[i];
        }

        const auto n_pieces =
            static_cast<std::size_t>(std::floor((m.duration_s + 1e-9) / piece_s));
        if (n_pieces == 0) continue;

        std::size_t link = 0;
        double used = 0.0;  // seconds consumed within span[link]
        auto frac_at = [&](std::size_t i, double t) {
            if (span[i] <= 0.0) return frac_lo[i];
            return frac_lo[i] + (frac_hi[i] - frac_lo[i]) * (t / span[i]);
        };

        for (std::size_t p = 0; p < n_pieces; ++p) {
            while (link < n && used >= span[link] - 1e-12) {
                ++link;
                used = 0.0;
            }
            if (link >= n) break;

            core::TrajectoryMeasurement piece;
            piece.id = m.id + "#" + std::to_string(p);
            piece.start_time = m.start_time + static_cast<double>(p) * piece_s;
            piece.duration_s = piece_s;
            piece.offset_start_m = frac_at(link, used) * length[link];

            const std::size_t first_link = link;
            double remaining = piece_s;
            while (remaining > span[link] - used && link + 1 < n) {
                remaining -= span[link] - used;
                ++link;
                used = 0.0;
            }
            used += remaining;
            if (used > span[link]) used = span[link];  // clamp terminal drift
            piece.offset_end_m = frac_at(link, used) * length[link];
            for (std::size_t i = first_link; i <= link; ++i) piece.path.push_back(m.path[i]);

            if (piece.path.size() == 1 && piece.offset_end_m <= piece.offset_start_m)
                continue;  // degenerate sliver from rounding
            pieces.push_back(std::move(piece));
        }
    }
    return pieces;
}

std::vector<std::pair<double, double>> default_duration_buckets() {
    return {{1.0, 3.0}, {3.0, 7.0}, {7.0, 14.0}, {14.0, 30.0}};
}

EvalReport evaluate(const em::ModelState& model, const core::RoadNetwork& net,
                    const std::vector<core::TrajectoryMeasurement>& pieces,
                    const gamma::SeriesConfig& cfg, stream::ThreadPool* pool) {
    gamma::ParamMap params;
    for (const auto& [link, ls] : model.params) params.emplace(link, ls.params);

    const auto edges = default_duration_buckets();

    enum class PieceOutcome { Scored, OutOfRange, MissingParams };
    struct PieceScore {
        PieceOutcome outcome = PieceOutcome::OutOfRange;
        std::size_t bucket = 0;
        double abs_err = 0.0, rel_err = 0.0, sq_err = 0.0, ll = 0.0, nll = 0.0;
    };
    std::vector<PieceScore> scores(pieces.size());

    auto score_piece = [&](std::size_t i) {
        PieceScore& out = scores[i];
        auto obs = core::activation_vector(pieces[i], net);
        if (!obs) {
            out.outcome = PieceOutcome::OutOfRange;
            return;
        }
        const double minutes = obs->duration_s / 60.0;
        std::size_t b = edges.size();
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const bool last = e + 1 == edges.size();
            if (minutes >= edges[e].first &&
                (minutes < edges[e].second || (last && minutes <= edges[e].second))) {
                b = e;
                break;
            }
        }
        if (b == edges.size()) {
            out.outcome = PieceOutcome::OutOfRange;
            return;
        }

        double mean = 0.0, var = 0.0;
        for (const auto& [link, a] : obs->weights) {
            auto it = params.find(link);
            if (it == params.end()) {
                out.outcome = PieceOutcome::MissingParams;
                return;
            }
            mean += a * it->second.mean();
            var += a * a * it->second.variance();
        }
        double ll;
        try {
            ll = gamma::path_log_likelihood(*obs, params, cfg);
        } catch (const std::exception&) {
            out.outcome = PieceOutcome::MissingParams;
            return;
        }

        const double err = obs->duration_s - mean;
        out.outcome = PieceOutcome::Scored;
        out.bucket = b;
        out.abs_err = std::abs(err);
        out.rel_err = std::abs(err) / obs->duration_s;
        out.sq_err = err * err;
        out.ll = ll;
        out.nll = ll + 0.5 * std::log(var);
    };

    constexpr std::size_t kChunk = 64;
    const std::size_t chunks = (pieces.size() + kChunk - 1) / kChunk;
    auto run_chunk = [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(pieces.size(), lo + kChunk);
        for (std::size_t i = lo; i < hi; ++i) score_piece(i);
    };
    if (pool)
        pool->parallel_for(chunks, run_chunk);
    else
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);

    struct Acc {
        std::vector<double> l1, l1_rel, sq, ll, nll;
    };
    std::vector<Acc> acc(edges.size());
    EvalReport report;
    for (const auto& s : scores) {
        switch (s.outcome) {
            case PieceOutcome::OutOfRange:
                ++report.excluded_out_of_range;
                break;
            case PieceOutcome::MissingParams:
                ++report.excluded_missing_params;
                break;
            case PieceOutcome::Scored:
                acc[s.bucket].l1.push_back(s.abs_err);
                acc[s.bucket].l1_rel.push_back(s.rel_err);
                acc[s.bucket].sq.push_back(s.sq_err);
                acc[s.bucket].ll.push_back(s.ll);
                acc[s.bucket].nll.push_back(s.nll);
                ++report.evaluated;
                break;
        }
    }

    auto mean_ci = [](const std::vector<double>& xs, double& mean, double& ci) {
        mean = 0.0;
        ci = 0.0;
        if (xs.empty()) return;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        if (xs.size() < 2) return;
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size() - 1);
        ci = 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
    };

    for (std::size_t i = 0; i < edges.size(); ++i) {
        BucketStats bs;
        bs.lo_min = edges[i].first;
        bs.hi_min = edges[i].second;
        bs.count = acc[i].l1.size();
        mean_ci(acc[i].l1, bs.l1_mean, bs.l1_ci);
        mean_ci(acc[i].l1_rel, bs.l1_rel_mean, bs.l1_rel_ci);
        double msq = 0.0, msq_ci = 0.0;
        mean_ci(acc[i].sq, msq, msq_ci);
        bs.rmse = std::sqrt(msq);
        bs.rmse_ci_low = std::sqrt(std::max(0.0, msq - msq_ci));
        bs.rmse_ci_high = std::sqrt(msq + msq_ci);
        mean_ci(acc[i].ll, bs.log_lik_mean, bs.log_lik_ci);
        mean_ci(acc[i].nll, bs.norm_log_lik_mean, bs.norm_log_lik_ci);
        report.buckets.push_back(bs);
    }
    return report;
}

void write_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json buckets = nlohmann::json::array();
    for (const auto& b : report.buckets) {
        buckets.push_back({{"lo_min", b.lo_min},
                           {"hi_min", b.hi_min},
                           {"count", b.count},
                           {"l1_mean", b.l1_mean},
                           {"l1_ci", b.l1_ci},
                           {"l1_rel_mean", b.l1_rel_mean},
                           {"l1_rel_ci", b.l1_rel_ci},
                           {"rmse", b.rmse},
                           {"rmse_ci_low", b.rmse_ci_low},
                           {"rmse_ci_high", b.rmse_ci_high},
                           {"log_lik_mean", b.log_lik_mean},
                           {"log_lik_ci", b.log_lik_ci},
                           {"norm_log_lik_mean", b.norm_log_lik_mean},
                           {"norm_log_lik_ci", b.norm_log_lik_ci}});
    }
    nlohmann::json j{{"format_version", 1},
                     {"evaluated", report.evaluated},
                     {"excluded_missing_params", report.excluded_missing_params},
                     {"excluded_out_of_range", report.excluded_out_of_range},
                     {"buckets", buckets}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report " + path);
    out << j.dump(2) << "\n";
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report " + path);
    out << "bucket,metric,value,ci_low,ci_high\n";
    auto row = [&](const BucketStats& b, const char* metric, double v, double lo, double hi) {
        out << b.lo_min << "-" << b.hi_min << "min," << metric << "," << v << "," << lo << ","
            << hi << "\n";
    };
    for (const auto& b : report.buckets) {
        row(b, "count", static_cast<double>(b.count), static_cast<double>(b.count),
            static_cast<double>(b.count));
        row(b, "l1", b.l1_mean, b.l1_mean - b.l1_ci, b.l1_mean + b.l1_ci);
        row(b, "l1_rel", b.l1_rel_mean, b.l1_rel_mean - b.l1_rel_ci,
            b.l1_rel_mean + b.l1_rel_ci);
        row(b, "rmse", b.rmse, b.rmse_ci_low, b.rmse_ci_high);
        row(b, "log_lik", b.log_lik_mean, b.log_lik_mean - b.log_lik_ci,
            b.log_lik_mean + b.log_lik_ci);
        row(b, "norm_log_lik", b.norm_log_lik_mean, b.norm_log_lik_mean - b.norm_log_lik_ci,
            b.norm_log_lik_mean + b.norm_log_lik_ci);
    }
}

} // namespace linktt::eval
