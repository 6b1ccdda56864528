#include "linktt/gamma/conditional.hpp"

#include <cmath>
#include <stdexcept>

#include "linktt/gamma/density.hpp"
#include "linktt/gamma/special.hpp"

namespace linktt::gamma {

namespace {

double alpha_norm2(std::span<const double> alpha) {
    double s = 0.0;
    for (double a : alpha) s += a * a;
    return std::sqrt(s);
}

std::vector<GammaParams> rescaled_params(std::span<const double> alpha, double d,
                                         std::span<const GammaParams> params) {
    std::vector<GammaParams> hat(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        hat[i] = GammaParams{params[i].k, alpha[i] * params[i].theta / d};
        hat[i].check();
    }
    return hat;
}

}  // namespace

void SimplexPoint::check() const {
    if (z.size() != alpha.size() || z.empty())
        throw std::domain_error("SimplexPoint: dimension mismatch");
    if (!(d > 0.0)) throw std::domain_error("SimplexPoint: d must be > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!(z[i] > 0.0)) throw std::domain_error("SimplexPoint: z must be > 0");
        if (!(alpha[i] > 0.0)) throw std::domain_error("SimplexPoint: alpha must be > 0");
        s += alpha[i] * z[i];
    }
    if (std::abs(s - d) > 1e-9 * d)
        throw std::domain_error("SimplexPoint: alpha^T z != d");
}

double conditional_log_density(const SimplexPoint& pt,
                               std::span<const GammaParams> params,
                               const SeriesConfig& cfg) {
    pt.check();
    if (pt.z.size() != params.size())
        throw std::domain_error("conditional_log_density: dimension mismatch");
    if (params.size() < 2)
        throw std::domain_error("conditional_log_density: n = 1 support is a point mass");

    double log_prod = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i)
        log_prod += gamma_log_pdf(pt.z[i], params[i]);

    const auto hat = rescaled_params(pt.alpha, pt.d, params);
    const double log_kappa = sum_gamma_log_density(1.0, hat, cfg);
    return log_prod + std::log(pt.d) - std::log(alpha_norm2(pt.alpha)) - log_kappa;
}

ConditionalSample sample_conditional(std::span<const double> alpha, double d,
                                     std::span<const GammaParams> params, Rng& rng) {
    const std::size_t n = params.size();
    if (alpha.size() != n || n == 0)
        throw std::domain_error("sample_conditional: dimension mismatch");
    if (!(d > 0.0)) throw std::domain_error("sample_conditional: d must be > 0");
    for (double a : alpha)
        if (!(a > 0.0)) throw std::domain_error("sample_conditional: alpha must be > 0");

    ConditionalSample out;
    out.point.alpha.assign(alpha.begin(), alpha.end());
    out.point.d = d;
    out.point.z.resize(n);

    if (n == 1) {
        // the constraint pins the single coordinate
        out.point.z[0] = d / alpha[0];
        out.proposal_log_density = 0.0;
        return out;
    }

    const auto hat = rescaled_params(alpha, d, params);

    std::vector<double> a(n);
    constexpr int kMaxRetries = 100;
    double total = 0.0;
    for (int attempt = 0;; ++attempt) {
        total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.gamma(hat[i].k, hat[i].theta);
            total += a[i];
        }
        if (total > 0.0 && std::isfinite(total)) break;
        if (attempt + 1 >= kMaxRetries)
            throw std::runtime_error("sample_conditional: repeated underflow in Gamma draws");
    }

    for (std::size_t i = 0; i < n; ++i) out.point.z[i] = d * a[i] / (alpha[i] * total);

    // renormalize so the constraint holds exactly up to rounding
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += alpha[i] * out.point.z[i];
    const double fix = d / s;
    for (auto& zi : out.point.z) zi *= fix;

    // Scaled-Dirichlet density of x = a / sum(a) on the regular simplex,
    // w.r.t. Lebesgue measure of the first n-1 coordinates:
    //   f_X(x) = Gamma(ktilde) * prod x_i^{k_i-1}
    //            / (prod Gamma(k_i) theta_hat_i^{k_i} * (sum_j x_j/theta_hat_j)^ktilde)
    // mapped through z_i = d x_i / alpha_i and onto the surface measure.
    double ktilde = 0.0;
    double log_fx = 0.0;
    double rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a[i] / total;
        ktilde += hat[i].k;
        log_fx += (hat[i].k - 1.0) * std::log(x) - log_gamma(hat[i].k) -
                  hat[i].k * std::log(hat[i].theta);
        rate += x / hat[i].theta;
    }
    log_fx += log_gamma(ktilde) - ktilde * std::log(rate);

    double log_alpha_prod = 0.0;
    for (double av : alpha) log_alpha_prod += std::log(av);
    out.proposal_log_density = log_fx + log_alpha_prod -
                               (static_cast<double>(n) - 1.0) * std::log(d) -
                               std::log(alpha_norm2(alpha));
    return out;
}

double importance_log_weight(std::span<const double> z,
                             std::span<const GammaParams> params) {
    if (z.size() != params.size() || z.empty())
        throw std::domain_error("importance_log_weight: dimension mismatch");
    double ktilde = 0.0;
    double rate = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        ktilde += params[i].k;
        rate += z[i] / params[i].theta;
    }
    return ktilde * std::log(rate) - rate;
}

} // namespace linktt::gamma
