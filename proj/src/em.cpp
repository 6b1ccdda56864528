#include "linktt/em/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linktt/core/ops.hpp"
#include "linktt/gamma/conditional.hpp"
#include "linktt/gamma/density.hpp"
#include "linktt/gamma/fit.hpp"
#include "linktt/rng.hpp"

namespace linktt::em {

namespace {

constexpr double kWindowWeightFloor = 1e-3;
// fixed chunk sizes so parallel partitioning ignores the worker count
constexpr std::size_t kObsChunkSize = 256;
constexpr std::size_t kLinkChunkSize = 4;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ObsView {
    std::vector<double> alpha;
    std::vector<gamma::GammaParams> params;
    std::vector<core::LinkIndex> links;
};

ObsView view_of(const core::Observation& obs, const ModelState& state) {
    ObsView v;
    v.alpha.reserve(obs.size());
    v.params.reserve(obs.size());
    v.links.reserve(obs.size());
    for (const auto& [link, a] : obs.weights) {
        v.alpha.push_back(a);
        v.params.push_back(state.params.at(link).params);
        v.links.push_back(link);
    }
    return v;
}

struct ObsEStep {
    std::vector<WeightedSample> samples;
    double q_term = 0.0;   // decay * (sum_u wbar_u g_u + log kappa)
    double q_var = 0.0;    // decay^2 * IS variance of the g estimate
    bool skipped = false;
};

ObsEStep e_step_one(const WeightedObservation& wobs, const ModelState& state,
                    const EmConfig& cfg, std::uint64_t seed) {
    const auto& obs = wobs.obs;
    ObsEStep out;
    const ObsView v = view_of(obs, state);
    const std::size_t n = v.alpha.size();
    const std::size_t u_count = static_cast<std::size_t>(cfg.num_samples);

    Rng rng(combine_seed(seed, fnv1a64(obs.id)));

    std::vector<std::vector<double>> draws(u_count);
    std::vector<double> raw_logw(u_count);
    for (std::size_t u = 0; u < u_count; ++u) {
        auto s = gamma::sample_conditional(v.alpha, obs.duration_s, v.params, rng);
        if (n == 1) {
            raw_logw[u] = 0.0;
        } else if (cfg.paper_faithful_sampling) {
            double lw = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                lw += gamma::gamma_log_pdf(s.point.z[i], v.params[i]);
            raw_logw[u] = lw;
        } else {
            raw_logw[u] = gamma::importance_log_weight(s.point.z, v.params);
        }
        draws[u] = std::move(s.point.z);
    }

    // self-normalize the per-observation sample weights
    double max_lw = kNegInf;
    for (double lw : raw_logw) max_lw = std::max(max_lw, lw);
    if (max_lw == kNegInf) {
        out.skipped = true;
        return out;
    }
    double norm = 0.0;
    for (double lw : raw_logw) norm += std::exp(lw - max_lw);

    std::vector<double> wbar(u_count);
    for (std::size_t u = 0; u < u_count; ++u)
        wbar[u] = std::exp(raw_logw[u] - max_lw) / norm;

    out.samples.reserve(u_count * n);
    double g_mean = 0.0;
    std::vector<double> g(u_count);
    for (std::size_t u = 0; u < u_count; ++u) {
        double g_u = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            g_u += gamma::gamma_log_pdf(draws[u][i], v.params[i]);
            out.samples.push_back(WeightedSample{v.links[i], draws[u][i],
                                                 wobs.weight * wbar[u], obs.id});
        }
        g[u] = g_u;
        g_mean += wbar[u] * g_u;
    }

    double g_var = 0.0;
    for (std::size_t u = 0; u < u_count; ++u) {
        const double dg = g[u] - g_mean;
        g_var += wbar[u] * wbar[u] * dg * dg;
    }

    // conditional normalization term: log kappa of the rescaled components
    std::vector<gamma::GammaParams> hat(n);
    for (std::size_t i = 0; i < n; ++i)
        hat[i] = gamma::GammaParams{v.params[i].k, v.alpha[i] * v.params[i].theta / obs.duration_s};
    const double log_kappa = gamma::sum_gamma_log_density(1.0, hat, cfg.series);

    out.q_term = wobs.weight * (g_mean + log_kappa);
    out.q_var = wobs.weight * wobs.weight * g_var;
    return out;
}

}  // namespace

EStepResult e_step(std::span<const WeightedObservation> observations, ModelState& state,
                   const EmConfig& cfg, const PriorFn& prior, std::uint64_t seed,
                   stream::ThreadPool* pool) {
    // serial pre-pass: seed parameters for links not yet in the state
    for (const auto& wobs : observations)
        for (const auto& [link, a] : wobs.obs.weights)
            if (!state.params.count(link))
                state.params.emplace(link, LinkState{prior(link), 0.0});

    const std::size_t n = observations.size();
    const std::size_t chunks = (n + kObsChunkSize - 1) / kObsChunkSize;
    std::vector<std::vector<ObsEStep>> per_chunk(chunks);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t lo = c * kObsChunkSize;
        const std::size_t hi = std::min(n, lo + kObsChunkSize);
        auto& slot = per_chunk[c];
        slot.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                slot.push_back(e_step_one(observations[i], state, cfg, seed));
            } catch (const std::exception&) {
                ObsEStep failed;
                failed.skipped = true;
                slot.push_back(std::move(failed));
            }
        }
    };
    if (pool)
        pool->parallel_for(chunks, run_chunk);
    else
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);

    EStepResult out;
    double q_var = 0.0;
    std::size_t total_samples = 0;
    for (const auto& chunk : per_chunk)
        for (const auto& r : chunk) total_samples += r.samples.size();
    out.samples.reserve(total_samples);
    for (auto& chunk : per_chunk)
        for (auto& r : chunk) {
            if (r.skipped) {
                ++out.skipped;
                continue;
            }
            out.q += r.q_term;
            q_var += r.q_var;
            out.samples.insert(out.samples.end(),
                               std::make_move_iterator(r.samples.begin()),
                               std::make_move_iterator(r.samples.end()));
        }
    out.q_se = std::sqrt(q_var);
    return out;
}

std::map<core::LinkIndex, std::vector<WeightedSample>> shuffle(
    std::span<const WeightedSample> samples, stream::ThreadPool* pool) {
    std::map<core::LinkIndex, std::vector<WeightedSample>> grouped;
    if (samples.empty()) return grouped;

    // two phases keyed by fixed chunks: count, then write into disjoint
    // preallocated ranges; output order equals input order regardless of the
    // worker count
    constexpr std::size_t kShuffleChunk = 65536;
    const std::size_t chunks = (samples.size() + kShuffleChunk - 1) / kShuffleChunk;

    std::vector<std::map<core::LinkIndex, std::size_t>> counts(chunks);
    auto count_chunk = [&](std::size_t c) {
        const std::size_t lo = c * kShuffleChunk;
        const std::size_t hi = std::min(samples.size(), lo + kShuffleChunk);
        for (std::size_t i = lo; i < hi; ++i) ++counts[c][samples[i].link];
    };
    if (pool)
        pool->parallel_for(chunks, count_chunk);
    else
        for (std::size_t c = 0; c < chunks; ++c) count_chunk(c);

    // per-link chunk offsets, in chunk order
    std::map<core::LinkIndex, std::vector<std::size_t>> offsets;
    for (std::size_t c = 0; c < chunks; ++c)
        for (const auto& [link, cnt] : counts[c]) {
            auto& per_chunk = offsets[link];
            if (per_chunk.empty()) per_chunk.assign(chunks + 1, 0);
            per_chunk[c + 1] = cnt;
        }
    for (auto& [link, per_chunk] : offsets) {
        for (std::size_t c = 1; c <= chunks; ++c) per_chunk[c] += per_chunk[c - 1];
        grouped[link].resize(per_chunk[chunks]);
    }

    auto fill_chunk = [&](std::size_t c) {
        const std::size_t lo = c * kShuffleChunk;
        const std::size_t hi = std::min(samples.size(), lo + kShuffleChunk);
        std::map<core::LinkIndex, std::size_t> cursor;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto link = samples[i].link;
            auto it = cursor.find(link);
            if (it == cursor.end()) it = cursor.emplace(link, offsets[link][c]).first;
            grouped[link][it->second++] = samples[i];
        }
    };
    if (pool)
        pool->parallel_for(chunks, fill_chunk);
    else
        for (std::size_t c = 0; c < chunks; ++c) fill_chunk(c);
    return grouped;
}

ModelState m_step(const std::map<core::LinkIndex, std::vector<WeightedSample>>& grouped,
                  const ModelState& state, const PriorFn& prior, const EmConfig& cfg,
                  stream::ThreadPool* pool) {
    ModelState next = state;

    std::vector<core::LinkIndex> links;
    links.reserve(grouped.size());
    for (const auto& [link, _] : grouped) links.push_back(link);

    struct FitOut {
        core::LinkIndex link;
        LinkState ls;
        bool keep_previous = false;
        bool prior_fallback = false;
    };
    const std::size_t chunks = (links.size() + kLinkChunkSize - 1) / kLinkChunkSize;
    std::vector<std::vector<FitOut>> per_chunk(chunks);

    auto fit_chunk = [&](std::size_t c) {
        const std::size_t lo = c * kLinkChunkSize;
        const std::size_t hi = std::min(links.size(), lo + kLinkChunkSize);
        for (std::size_t i = lo; i < hi; ++i) {
            const core::LinkIndex link = links[i];
            const auto& group = grouped.at(link);
            FitOut fo;
            fo.link = link;

            double w_sum = 0.0, w_sq = 0.0;
            for (const auto& s : group) {
                w_sum += s.weight;
                w_sq += s.weight * s.weight;
            }
            const double ess = w_sq > 0.0 ? w_sum * w_sum / w_sq : 0.0;
            fo.ls.n_effective = ess;

            const gamma::GammaParams prior_gamma = prior(link);
            const auto pseudo = gamma::moment_pseudo_samples(prior_gamma);
            const double pw = cfg.prior_strength / 2.0;

            std::vector<double> xs, ws;
            if (ess >= cfg.min_ess) {
                xs.reserve(group.size() + 2);
                ws.reserve(group.size() + 2);
                for (const auto& s : group) {
                    xs.push_back(s.value_s);
                    ws.push_back(s.weight);
                }
            } else {
                fo.prior_fallback = true;
            }
            xs.push_back(pseudo.x_low);
            ws.push_back(pw);
            xs.push_back(pseudo.x_high);
            ws.push_back(pw);

            try {
                fo.ls.params = gamma::fit_gamma_weighted(xs, ws);
            } catch (const std::exception&) {
                fo.keep_previous = true;
            }
            per_chunk[c].push_back(std::move(fo));
        }
    };
    if (pool)
        pool->parallel_for(chunks, fit_chunk);
    else
        for (std::size_t c = 0; c < chunks; ++c) fit_chunk(c);

    for (const auto& chunk : per_chunk)
        for (const auto& fo : chunk) {
            if (fo.prior_fallback) ++next.diagnostics.prior_fallbacks;
            if (fo.keep_previous) {
                ++next.diagnostics.fit_failures;
                continue;
            }
            next.params[fo.link] = fo.ls;
        }
    return next;
}

ModelState em_iterate(std::span<const WeightedObservation> observations,
                      const ModelState& state, const PriorFn& prior, const EmConfig& cfg,
                      double t_current, std::uint64_t seed,
                      stream::ThreadPool* pool) {
    ModelState current = state;
    current.diagnostics = Diagnostics{};
    current.diagnostics.observations = observations.size();

    for (int it = 0; it < cfg.num_iterations; ++it) {
        const std::uint64_t iter_seed =
            combine_seed(seed, static_cast<std::uint64_t>(it));
        EStepResult es = e_step(observations, current, cfg, prior, iter_seed, pool);

        auto grouped = shuffle(es.samples, pool);
        current = m_step(grouped, current, prior, cfg, pool);

        auto& diag = current.diagnostics;
        diag.q = es.q;
        diag.q_se = es.q_se;
        diag.q_per_iteration.push_back(es.q);
        diag.q_se_per_iteration.push_back(es.q_se);
        diag.iterations = static_cast<std::size_t>(it) + 1;
        diag.samples_emitted += es.samples.size();
        diag.skipped_observations += es.skipped;
    }

    current.time_index = t_current;
    return current;
}

std::vector<WeightedObservation> assemble_window(std::span<const core::Observation> current_batch,
                                                 const HistoryProvider& history,
                                                 double t_current, const EmConfig& cfg,
                                                 const core::DecayConfig& decay) {
    std::vector<WeightedObservation> out;
    auto add = [&](const core::Observation& obs) {
        const double w = core::decay_weight(obs.time, t_current, decay);
        if (w >= kWindowWeightFloor) out.push_back(WeightedObservation{obs, w});
    };

    const double step_start = t_current - cfg.time_step_s;
    for (const auto& obs : history.in_range(t_current - cfg.day_window_s, step_start)) add(obs);
    for (const auto& obs : current_batch)
        if (obs.time <= t_current) add(obs);

    constexpr double kWeek = 7.0 * 86400.0;
    for (int w = 1; w <= cfg.weeks_lookback; ++w) {
        const double t_ref = t_current - w * kWeek;
        // closed upper bound: the same-time-of-day observation belongs to the slice
        const double hi = std::nextafter(t_ref, std::numeric_limits<double>::infinity());
        for (const auto& obs : history.in_range(t_ref - cfg.day_window_s, hi)) add(obs);
    }
    return out;
}

} // namespace linktt::em
