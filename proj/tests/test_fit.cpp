#include <cmath>
#include <vector>

#include <doctest.h>

#include "linktt/gamma/fit.hpp"
#include "linktt/gamma/special.hpp"
#include "linktt/rng.hpp"

using namespace linktt::gamma;
using linktt::Rng;

TEST_SUITE_BEGIN("fit");

namespace {

std::vector<double> draw_gamma(double k, double theta, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.gamma(k, theta);
    return xs;
}

}  // namespace

TEST_CASE("recovers parameters from a large i.i.d. sample within asymptotic bands") {
    const double k = 2.0, theta = 3.0;
    constexpr std::size_t kN = 100000;
    auto xs = draw_gamma(k, theta, kN, 11);
    std::vector<double> ws(kN, 1.0);
    const auto fit = fit_gamma_weighted(xs, ws);

    // asymptotic MLE variances from the Fisher information
    const double denom = k * trigamma(k) - 1.0;
    const double sd_k = std::sqrt(k / (kN * denom));
    const double sd_theta = std::sqrt(trigamma(k) * theta * theta / (kN * denom));
    CHECK(std::abs(fit.k - k) < 3.0 * sd_k);
    CHECK(std::abs(fit.theta - theta) < 3.0 * sd_theta);
    CHECK(std::abs(fit.k - k) < 0.05);
    CHECK(std::abs(fit.theta - theta) < 0.08);
}

TEST_CASE("scale equivariance") {
    auto xs = draw_gamma(1.7, 0.9, 5000, 12);
    std::vector<double> ws(xs.size(), 1.0);
    const auto base = fit_gamma_weighted(xs, ws);
    const double c = 7.3;
    auto scaled = xs;
    for (auto& x : scaled) x *= c;
    const auto fit = fit_gamma_weighted(scaled, ws);
    CHECK(fit.k == doctest::Approx(base.k).epsilon(1e-9));
    CHECK(fit.theta == doctest::Approx(c * base.theta).epsilon(1e-9));
}

TEST_CASE("weight homogeneity: duplicating samples at half weight changes nothing") {
    auto xs = draw_gamma(3.2, 2.0, 2000, 13);
    std::vector<double> ws(xs.size(), 1.0);
    const auto base = fit_gamma_weighted(xs, ws);

    std::vector<double> xs2 = xs;
    xs2.insert(xs2.end(), xs.begin(), xs.end());
    std::vector<double> ws2(xs2.size(), 0.5);
    const auto fit = fit_gamma_weighted(xs2, ws2);
    CHECK(fit.k == doctest::Approx(base.k).epsilon(1e-10));
    CHECK(fit.theta == doctest::Approx(base.theta).epsilon(1e-10));
}

TEST_CASE("uniform weight rescaling is invariant") {
    auto xs = draw_gamma(2.5, 1.1, 1000, 14);
    std::vector<double> ws(xs.size(), 1.0);
    const auto base = fit_gamma_weighted(xs, ws);
    for (auto& w : ws) w = 17.0;
    const auto fit = fit_gamma_weighted(xs, ws);
    CHECK(fit.k == doctest::Approx(base.k).epsilon(1e-12));
    CHECK(fit.theta == doctest::Approx(base.theta).epsilon(1e-12));
}

TEST_CASE("degenerate and invalid inputs") {
    std::vector<double> equal{2.0, 2.0, 2.0};
    std::vector<double> ws{1.0, 1.0, 1.0};
    CHECK_THROWS_AS(fit_gamma_weighted(equal, ws), std::domain_error);

    std::vector<double> bad{1.0, -2.0};
    std::vector<double> w2{1.0, 1.0};
    CHECK_THROWS_AS(fit_gamma_weighted(bad, w2), std::domain_error);

    std::vector<double> one{1.0};
    std::vector<double> w1{1.0};
    CHECK_THROWS_AS(fit_gamma_weighted(one, w1), std::domain_error);

    // zero-weight entries do not count toward the minimum
    std::vector<double> xs{1.0, 2.0, 3.0};
    std::vector<double> wz{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(fit_gamma_weighted(xs, wz), std::domain_error);
}

TEST_CASE("extreme shapes still converge") {
    // near-deterministic samples: very large k
    auto xs = draw_gamma(5000.0, 0.01, 20000, 15);
    std::vector<double> ws(xs.size(), 1.0);
    const auto fit = fit_gamma_weighted(xs, ws);
    CHECK(fit.k > 3500.0);
    CHECK(fit.k < 7000.0);
    // heavy-tailed: k < 1
    auto ys = draw_gamma(0.3, 2.0, 100000, 16);
    const std::vector<double> wy(ys.size(), 1.0);
    const auto fy = fit_gamma_weighted(ys, wy);
    CHECK(fy.k == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("pseudo-samples refit to the exact prior parameters") {
    for (const auto& p : {GammaParams{2.0, 5.0}, GammaParams{0.7, 40.0},
                          GammaParams{6.0, 11.0}}) {
        const auto ps = moment_pseudo_samples(p);
        CHECK(ps.x_low > 0.0);
        CHECK(ps.x_high > ps.x_low);
        std::vector<double> xs{ps.x_low, ps.x_high};
        std::vector<double> ws{0.5, 0.5};
        const auto fit = fit_gamma_weighted(xs, ws);
        CHECK(fit.k == doctest::Approx(p.k).epsilon(1e-8));
        CHECK(fit.theta == doctest::Approx(p.theta).epsilon(1e-8));
        CHECK(fit.mean() == doctest::Approx(p.mean()).epsilon(1e-8));
        CHECK(fit.stddev() == doctest::Approx(p.stddev()).epsilon(1e-8));
    }
}

TEST_SUITE_END();
