#pragma once

#include <functional>
#include <map>
#include <span>

#include "linktt/em/types.hpp"
#include "linktt/stream/pool.hpp"

namespace linktt::em {

// Supplies moment-matched prior parameters for a link (derived from its
// length and speed limit by core::prior_params).
using PriorFn = std::function<gamma::GammaParams(core::LinkIndex)>;

struct EStepResult {
    std::vector<WeightedSample> samples;
    double q = 0.0;      // expected complete log-likelihood estimate
    double q_se = 0.0;   // Monte Carlo standard error of q
    std::size_t skipped = 0;
};

// E-step: for each observation draws cfg.num_samples allocations of the
// observed duration across its links with gamma::sample_conditional and emits
// per-link weighted samples. Per-observation sample weights are normalized to
// sum to one, then scaled by the observation's decay weight. Weights are
// importance-corrected unless cfg.paper_faithful_sampling. Links missing from
// the state are seeded from the prior first (serial pre-pass). Per-observation
// generators are seeded from (seed, observation id), so output is independent
// of scheduling. Sampling failures skip the observation and are counted.
EStepResult e_step(std::span<const WeightedObservation> observations, ModelState& state,
                   const EmConfig& cfg, const PriorFn& prior, std::uint64_t seed,
                   stream::ThreadPool* pool = nullptr);

// Exact multiset partition of the samples by link; input order is preserved
// within each group. The partition itself may run on the pool (fixed chunking,
// disjoint writes), so the grouping is identical for any worker count.
std::map<core::LinkIndex, std::vector<WeightedSample>> shuffle(
    std::span<const WeightedSample> samples, stream::ThreadPool* pool = nullptr);

// M-step: refits each grouped link by weighted Gamma MLE with the prior's
// pseudo-samples appended at total weight cfg.prior_strength. Links whose data
// ESS is below cfg.min_ess fall back to the prior fit; fit failures keep the
// previous parameters. Links absent from the grouping are untouched.
ModelState m_step(const std::map<core::LinkIndex, std::vector<WeightedSample>>& grouped,
                  const ModelState& state, const PriorFn& prior, const EmConfig& cfg,
                  stream::ThreadPool* pool = nullptr);

// Runs cfg.num_iterations of (e_step; shuffle; m_step) warm-started from
// `state`, advancing time_index to t_current. Per-iteration diagnostics are
// collected; an iteration failure never aborts the batch.
ModelState em_iterate(std::span<const WeightedObservation> observations,
                      const ModelState& state, const PriorFn& prior, const EmConfig& cfg,
                      double t_current, std::uint64_t seed,
                      stream::ThreadPool* pool = nullptr);

// Read interface over the historical observation store; implemented by
// io::HistoricalStore. Returns observations with time in [t_lo, t_hi).
class HistoryProvider {
public:
    virtual ~HistoryProvider() = default;
    virtual std::vector<core::Observation> in_range(double t_lo, double t_hi) const = 0;
};

// Builds the decay-weighted data window for one time step: the current batch
// plus same-day history over cfg day_window and the same-weekday slices of the
// past weeks_lookback weeks, each weighted by core::decay_weight. Observations
// below weight 1e-3 are dropped. The store is expected to hold data from
// before the current step only (the driver stores the batch afterwards).
std::vector<WeightedObservation> assemble_window(std::span<const core::Observation> current_batch,
                                                 const HistoryProvider& history,
                                                 double t_current, const EmConfig& cfg,
                                                 const core::DecayConfig& decay);

} // namespace linktt::em
