#pragma once

#include <span>

#include "linktt/gamma/params.hpp"

namespace linktt::gamma {

// Weighted maximum-likelihood Gamma fit: maximizes sum_i w_i log f(x_i; k, theta).
// Profile solution: theta = weighted_mean / k and k solves
//   log k - psi(k) = log(weighted_mean) - weighted_mean_of_logs
// by Newton iteration from the moment-matched start k0 = mean^2 / variance,
// with bisection on (1e-8, 1e8) if an update leaves the domain.
// Errors: non-positive samples, fewer than two positive weights, or zero
// weighted variance ("degenerate sample set").
GammaParams fit_gamma_weighted(std::span<const double> samples,
                               std::span<const double> weights);

// Two pseudo-observations with equal weights whose weighted mean and mean-log
// match the given Gamma exactly, so that fit_gamma_weighted on them alone
// recovers the distribution. Used to realize the prior in the M-step.
struct PseudoSamples {
    double x_low = 0.0;
    double x_high = 0.0;
};
PseudoSamples moment_pseudo_samples(const GammaParams& p);

} // namespace linktt::gamma
