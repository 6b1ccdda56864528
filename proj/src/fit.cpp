#include "linktt/gamma/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linktt/gamma/special.hpp"

namespace linktt::gamma {

namespace {

constexpr double kLo = 1e-8;
constexpr double kHi = 1e8;

double solve_shape(double s, double k0) {
    // root of g(k) = log k - psi(k) - s; g decreases from +inf to -s on (0, inf)
    double k = std::clamp(k0, kLo, kHi);
    double lo = kLo, hi = kHi;
    for (int it = 0; it < 100; ++it) {
        const double g = std::log(k) - digamma(k) - s;
        if (g > 0.0)
            lo = std::max(lo, k);
        else
            hi = std::min(hi, k);
        const double dg = 1.0 / k - trigamma(k);
        double next = k - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - k) / k < 1e-10) return next;
        k = next;
    }
    return k;
}

}  // namespace

GammaParams fit_gamma_weighted(std::span<const double> samples,
                               std::span<const double> weights) {
    if (samples.size() != weights.size())
        throw std::domain_error("fit_gamma_weighted: size mismatch");
    double w_sum = 0.0, wx = 0.0, wlogx = 0.0;
    std::size_t positive_weights = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w = weights[i];
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::domain_error("fit_gamma_weighted: weights must be finite and >= 0");
        if (w == 0.0) continue;
        const double x = samples[i];
        if (!(x > 0.0)) throw std::domain_error("fit_gamma_weighted: samples must be > 0");
        ++positive_weights;
        w_sum += w;
        wx += w * x;
        wlogx += w * std::log(x);
    }
    if (positive_weights < 2)
        throw std::domain_error("fit_gamma_weighted: need at least 2 weighted samples");

    const double mean = wx / w_sum;
    const double mean_log = wlogx / w_sum;
    const double s = std::log(mean) - mean_log;
    if (!(s > 0.0)) throw std::domain_error("fit_gamma_weighted: degenerate sample set");

    double wvar = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const double dx = samples[i] - mean;
        wvar += weights[i] * dx * dx;
    }
    wvar /= w_sum;
    if (!(wvar > 0.0)) throw std::domain_error("fit_gamma_weighted: degenerate sample set");

    const double k = solve_shape(s, mean * mean / wvar);
    GammaParams out{k, mean / k};
    out.check();
    return out;
}

PseudoSamples moment_pseudo_samples(const GammaParams& p) {
    p.check();
    const double mean = p.mean();
    const double mean_log = digamma(p.k) + std::log(p.theta);
    // roots of t^2 - 2*mean*t + exp(2*mean_log); real and positive since
    // log(mean) > mean_log for any Gamma
    const double prod = std::exp(2.0 * mean_log);
    const double disc = mean * mean - prod;
    if (!(disc > 0.0))
        throw std::domain_error("moment_pseudo_samples: degenerate parameters");
    const double root = std::sqrt(disc);
    return PseudoSamples{mean - root, mean + root};
}

} // namespace linktt::gamma
