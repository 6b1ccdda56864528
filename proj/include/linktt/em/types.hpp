#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "linktt/core/types.hpp"
#include "linktt/gamma/params.hpp"

namespace linktt::em {

// One per-link travel-time sample produced by the E-step.
struct WeightedSample {
    core::LinkIndex link = -1;
    double value_s = 0.0;
    double weight = 0.0;
    std::string observation_id;
};

struct LinkState {
    gamma::GammaParams params;
    double n_effective = 0.0;  // effective sample size of the last data fit
};

struct Diagnostics {
    // expected complete log-likelihood of the last iteration and its Monte
    // Carlo standard error, plus the per-iteration trace
    double q = 0.0;
    double q_se = 0.0;
    std::vector<double> q_per_iteration;
    std::vector<double> q_se_per_iteration;
    std::size_t iterations = 0;
    std::size_t observations = 0;
    std::size_t samples_emitted = 0;
    std::size_t skipped_observations = 0;
    std::size_t fit_failures = 0;
    std::size_t prior_fallbacks = 0;
};

// Snapshot of the model: per-link Gamma parameters keyed by dense link index.
// Sparse by design; links never observed and never requested carry no entry.
struct ModelState {
    double time_index = 0.0;
    std::unordered_map<core::LinkIndex, LinkState> params;
    Diagnostics diagnostics;
};

struct EmConfig {
    int num_samples = 100;       // E-step samples per observation (10-100)
    int num_iterations = 5;      // EM iterations per time step (1-5)
    int weeks_lookback = 10;     // same-weekday history depth (1-10)
    double day_window_s = 7200.0;   // same-day window (20 min - 2 h)
    double time_step_s = 300.0;     // step duration (5 s - 20 min)
    double prior_strength = 1.0;    // total pseudo-sample weight
    double min_ess = 3.0;           // refuse data fits below this ESS
    gamma::SeriesConfig series;
    bool paper_faithful_sampling = false;

    void check() const {
        if (num_samples < 10 || num_samples > 100)
            throw std::domain_error("EmConfig: num_samples must be in [10,100]");
        if (num_iterations < 1 || num_iterations > 5)
            throw std::domain_error("EmConfig: num_iterations must be in [1,5]");
        if (weeks_lookback < 1 || weeks_lookback > 10)
            throw std::domain_error("EmConfig: weeks_lookback must be in [1,10]");
        if (day_window_s < 20.0 * 60.0 || day_window_s > 2.0 * 3600.0)
            throw std::domain_error("EmConfig: day_window_s must be in [20 min, 2 h]");
        if (time_step_s < 5.0 || time_step_s > 20.0 * 60.0)
            throw std::domain_error("EmConfig: time_step_s must be in [5 s, 20 min]");
        if (!(prior_strength > 0.0))
            throw std::domain_error("EmConfig: prior_strength must be > 0");
        if (!(min_ess >= 0.0)) throw std::domain_error("EmConfig: min_ess must be >= 0");
        series.check();
    }
};

// An observation paired with its decay weight inside an assembled window.
struct WeightedObservation {
    core::Observation obs;
    double weight = 1.0;
};

} // namespace linktt::em
