#pragma once

#include <span>

#include "linktt/gamma/params.hpp"

namespace linktt::gamma {

// log f_Gamma(x; k, theta) = -lgamma(k) - k*log(theta) + (k-1)*log(x) - x/theta.
// Requires x > 0.
double gamma_log_pdf(double x, const GammaParams& p);

// Log of the density of Y = sum_j Y_j at y, with Y_j independent
// Gamma(k_j, theta_j). Single-Gamma series expansion (Moschopoulos):
//
//   f_Y(y) = C * sum_l delta_l * f_Gamma(y; rho + l, beta1)
//
// with beta1 = min_j theta_j, rho = sum_j k_j, C = prod_j (beta1/theta_j)^{k_j}
// and delta_l >= 0 given by the recursion over the ratios (1 - beta1/theta_j).
// All accumulation happens in log space; a common rescaling offset keeps the
// delta array inside double range for large rho / wide scale spreads.
// Truncates once the geometric tail bound drops below rel_tol of the sum;
// throws SeriesError if max_terms is reached first.
double sum_gamma_log_density(double y, std::span<const GammaParams> params,
                             const SeriesConfig& cfg = {});

// Normalization constant of the Gamma-Dirichlet family:
// kappa(k, theta) = f_Y(1.0) for Y the sum of the components.
double kappa(std::span<const GammaParams> params, const SeriesConfig& cfg = {});

// Log-density at d of sum_i alpha_i * X_i with X_i ~ Gamma(params_i); used as
// the per-observation likelihood term. Scaling a Gamma by alpha multiplies its
// scale parameter.
double weighted_sum_log_density(double d, std::span<const double> alpha,
                                std::span<const GammaParams> params,
                                const SeriesConfig& cfg = {});

} // namespace linktt::gamma
