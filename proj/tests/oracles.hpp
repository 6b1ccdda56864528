#pragma once

// Independent reference implementations used as test oracles. Nothing here
// may call
// into the series/sampler code paths they are used to check: densities are
// integrated numerically, distributions compared against textbook CDFs, and
// conditional moments estimated by rejection sampling.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "linktt/gamma/params.hpp"
#include "linktt/rng.hpp"

namespace oracles {

using linktt::gamma::GammaParams;

// Gauss-Legendre nodes/weights on [-1, 1].
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};
Quadrature gauss_legendre(int n);

// integral of f over [a, b] with `panels` composite GL panels of order n
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 64,
                 int order = 16);

// Density of X1 + X2 at y by direct numerical convolution (trapezoid, fixed
// step). Independent of the series implementation.
double conv_density_2(double y, const GammaParams& p1, const GammaParams& p2,
                      double step = 1e-4);

// Density of X1 + X2 + X3 at y via a 2-D quadrature of the convolution
// integral.
double conv_density_3(double y, const GammaParams& p1, const GammaParams& p2,
                      const GammaParams& p3, int panels = 96, int order = 16);

// Integral over the simplex {z > 0 : alpha^T z = d} of exp(log_density(z)),
// with respect to the surface (Hausdorff) measure. n = 2 and n = 3.
double simplex_integral_2(std::span<const double> alpha, double d,
                          const std::function<double(std::span<const double>)>& log_density,
                          int panels = 256, int order = 16);
double simplex_integral_3(std::span<const double> alpha, double d,
                          const std::function<double(std::span<const double>)>& log_density,
                          int panels = 72, int order = 12);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double beta_cdf(double x, double a, double b);

// Kolmogorov-Smirnov statistic of samples against a CDF; sorts a copy.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Rejection-sampling estimate of conditional first/second moments of
// independent Gammas given |alpha^T x - d| < band_rel * d.
struct MomentEstimate {
    std::vector<double> mean;
    std::vector<double> mean_se;
    std::vector<double> second;  // E[x_i^2]
    std::vector<double> second_se;
    std::size_t accepted = 0;
    std::size_t proposed = 0;
};
MomentEstimate rejection_conditional_moments(std::span<const double> alpha, double d,
                                             std::span<const GammaParams> params,
                                             double band_rel, std::size_t target_accept,
                                             linktt::Rng& rng,
                                             std::size_t max_proposals = 400000000);

// Gaussian-kernel density estimate at a point with its standard error.
struct KdeEstimate {
    double value = 0.0;
    double se = 0.0;
};
KdeEstimate kde_at(std::span<const double> samples, double x, double bandwidth);

// Self-normalized importance-sampling mean of g over weighted points, with
// its delta-method standard error.
struct WeightedMean {
    double value = 0.0;
    double se = 0.0;
};
WeightedMean weighted_mean(std::span<const double> g, std::span<const double> log_w);

} // namespace oracles
