#include "linktt/gamma/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "linktt/gamma/special.hpp"

namespace linktt::gamma {

SeriesError::SeriesError(std::string_view what, double partial_log_sum, std::size_t terms)
    : std::runtime_error(std::string(what) + " (terms=" + std::to_string(terms) + ")"),
      partial_log_sum_(partial_log_sum),
      terms_(terms) {}

double gamma_log_pdf(double x, const GammaParams& p) {
    p.check();
    if (!(x > 0.0)) throw std::domain_error("gamma_log_pdf: x must be > 0");
    return -log_gamma(p.k) - p.k * std::log(p.theta) + (p.k - 1.0) * std::log(x) - x / p.theta;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

}  // namespace

double sum_gamma_log_density(double y, std::span<const GammaParams> params,
                             const SeriesConfig& cfg) {
    cfg.check();
    if (params.empty()) throw std::domain_error("sum_gamma_log_density: no components");
    if (!(y > 0.0)) throw std::domain_error("sum_gamma_log_density: y must be > 0");
    for (const auto& p : params) p.check();

    if (params.size() == 1) return gamma_log_pdf(y, params[0]);

    double beta1 = params[0].theta;
    double rho = 0.0;
    for (const auto& p : params) {
        beta1 = std::min(beta1, p.theta);
        rho += p.k;
    }

    // ratios r_j = 1 - beta1/theta_j in [0, 1); r_max drives the tail rate
    std::vector<double> ratio(params.size());
    double log_c = 0.0;
    double r_max = 0.0;
    for (std::size_t j = 0; j < params.size(); ++j) {
        ratio[j] = 1.0 - beta1 / params[j].theta;
        log_c += params[j].k * std::log(beta1 / params[j].theta);
        r_max = std::max(r_max, ratio[j]);
    }

    const double log_y = std::log(y);
    const double y_over_beta = y / beta1;
    const double log_beta = std::log(beta1);

    // delta recursion with a shared log-scale offset to avoid overflow
    std::vector<double> delta;
    delta.reserve(256);
    delta.push_back(1.0);
    double delta_log_offset = 0.0;

    // running powers r_j^m for the gamma coefficients g_m = sum_j k_j r_j^m
    std::vector<double> pow_r(params.size(), 1.0);
    std::vector<double> g;  // g[m-1] = g_m
    g.reserve(256);

    double log_sum = kNegInf;
    double prev_log_term = kNegInf;
    int tail_ok = 0;

    for (std::size_t l = 0; l < cfg.max_terms; ++l) {
        const double log_term = std::log(delta[l]) + delta_log_offset +
                                (rho + l - 1.0) * log_y - y_over_beta -
                                log_gamma(rho + l) - (rho + l) * log_beta;
        log_sum = log_add(log_sum, log_term);

        // stop once two consecutive terms are decreasing with a geometric
        // tail bound below rel_tol of the accumulated sum; an exactly-zero
        // term (delta underflow or the homogeneous case) counts as bounded
        bool bounded = false;
        if (l >= 1 && log_sum > kNegInf) {
            if (log_term == kNegInf) {
                bounded = true;
            } else if (log_term < prev_log_term) {
                const double q = std::exp(log_term - prev_log_term);
                if (q < 1.0 - 1e-9) {
                    const double log_tail = log_term + std::log(q / (1.0 - q));
                    bounded = log_tail < log_sum + std::log(cfg.rel_tol);
                }
            }
        }
        tail_ok = bounded ? tail_ok + 1 : 0;
        if (tail_ok >= 2) return log_c + log_sum;
        prev_log_term = log_term;

        // next gamma coefficient and delta
        double g_next = 0.0;
        for (std::size_t j = 0; j < params.size(); ++j) {
            pow_r[j] *= ratio[j];
            g_next += params[j].k * pow_r[j];
        }
        g.push_back(g_next);

        double acc = 0.0;
        for (std::size_t m = 1; m <= l + 1; ++m) acc += g[m - 1] * delta[l + 1 - m];
        delta.push_back(acc / static_cast<double>(l + 1));

        if (delta.back() > 1e250) {
            for (auto& dv : delta) dv *= 1e-250;
            delta_log_offset += 250.0 * std::log(10.0);
        }
    }
    throw SeriesError("sum_gamma_log_density: series did not converge",
                      log_c + log_sum, cfg.max_terms);
}

double kappa(std::span<const GammaParams> params, const SeriesConfig& cfg) {
    return std::exp(sum_gamma_log_density(1.0, params, cfg));
}

double weighted_sum_log_density(double d, std::span<const double> alpha,
                                std::span<const GammaParams> params,
                                const SeriesConfig& cfg) {
    if (alpha.size() != params.size())
        throw std::domain_error("weighted_sum_log_density: dimension mismatch");
    std::vector<GammaParams> scaled(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(alpha[i] > 0.0))
            throw std::domain_error("weighted_sum_log_density: alpha must be > 0");
        scaled[i] = GammaParams{params[i].k, alpha[i] * params[i].theta};
    }
    return sum_gamma_log_density(d, scaled, cfg);
}

} // namespace linktt::gamma
