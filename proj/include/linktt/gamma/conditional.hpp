#pragma once

#include <span>
#include <vector>

#include "linktt/gamma/params.hpp"
#include "linktt/rng.hpp"

namespace linktt::gamma {

// A point of the simplex S_{alpha,d} = { z > 0 : alpha^T z = d }.
struct SimplexPoint {
    std::vector<double> z;
    std::vector<double> alpha;
    double d = 0.0;

    // |sum_i alpha_i z_i - d| <= 1e-9 * d and z_i > 0
    void check() const;
};

// Log-density at pt of independent Gammas conditioned on alpha^T X = d,
// taken with respect to the surface measure on S_{alpha,d}:
//
//   log f(z) = sum_i log f_Gamma(z_i; k_i, theta_i)
//              + log d - log ||alpha||_2 - log kappa(k, theta_hat)
//
// where theta_hat_i = alpha_i * theta_i / d. The kappa term is the series
// normalization of the rescaled components; with this convention the density
// integrates to one over the simplex. Errors for n = 1 (point-mass support).
double conditional_log_density(const SimplexPoint& pt,
                               std::span<const GammaParams> params,
                               const SeriesConfig& cfg = {});

struct ConditionalSample {
    SimplexPoint point;
    // Log-density of the returned point under the normalized-Gamma proposal
    // (a_i ~ Gamma(k_i, theta_hat_i), z_i = d * a_i / (alpha_i * sum_j a_j)),
    // w.r.t. the same surface measure as conditional_log_density.
    double proposal_log_density = 0.0;
};

// Draws one point of S_{alpha,d} by normalizing independent Gamma draws with
// rescaled scales theta_hat_i = alpha_i * theta_i / d. The construction is
// exact for the conditional law when all alpha_i * theta_i are equal; in
// general it is a proposal whose density is returned alongside so callers can
// importance-correct against conditional_log_density. The returned point is
// renormalized so the hyperplane constraint holds to 1e-9 * d.
ConditionalSample sample_conditional(std::span<const double> alpha, double d,
                                     std::span<const GammaParams> params, Rng& rng);

// Unnormalized log importance weight of a point under the corrected scheme:
// conditional_log_density - proposal_log_density up to a per-(alpha, d,
// params) constant. Cheap form used in the E-step hot path:
//
//   log w(z) = ktilde * log(sum_j z_j / theta_j) - sum_j z_j / theta_j
//
// with ktilde = sum_j k_j.
double importance_log_weight(std::span<const double> z,
                             std::span<const GammaParams> params);

} // namespace linktt::gamma
