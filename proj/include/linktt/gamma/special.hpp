#pragma once

// Special functions needed by the Gamma kernels: log-Gamma (Lanczos),
// digamma and trigamma (recurrence shift + asymptotic series).
// Self-contained so results are identical across platforms.

namespace linktt::gamma {

// log Gamma(x) for x > 0. Relative accuracy better than 1e-12.
double log_gamma(double x);

// digamma psi(x) for x > 0.
double digamma(double x);

// trigamma psi'(x) for x > 0.
double trigamma(double x);

} // namespace linktt::gamma
