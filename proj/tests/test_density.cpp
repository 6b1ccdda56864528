#include <cmath>
#include <vector>

#include <doctest.h>

#include "linktt/gamma/density.hpp"
#include "linktt/rng.hpp"
#include "oracles.hpp"

using namespace linktt::gamma;
using linktt::Rng;

TEST_SUITE_BEGIN("density");

TEST_CASE("gamma_log_pdf closed forms") {
    // exponential(1) at 1: density e^{-1}
    CHECK(gamma_log_pdf(1.0, {1.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-14));
    // exponential with scale 2 at 2: 0.5 e^{-1}
    CHECK(gamma_log_pdf(2.0, {1.0, 2.0}) ==
          doctest::Approx(std::log(0.5) - 1.0).epsilon(1e-14));
}

TEST_CASE("gamma_log_pdf against the independent lgamma path") {
    // frozen from -lgamma(2.5) - 2.5*log(1.7) + 1.5*log(3) - 3/1.7 (std::lgamma)
    const double expected = -std::lgamma(2.5) - 2.5 * std::log(1.7) + 1.5 * std::log(3.0) -
                            3.0 / 1.7;
    CHECK(gamma_log_pdf(3.0, {2.5, 1.7}) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("gamma_log_pdf rejects x <= 0") {
    CHECK_THROWS_AS(gamma_log_pdf(0.0, {1.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS(gamma_log_pdf(-1.0, {1.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS(gamma_log_pdf(1.0, {0.0, 1.0}), std::domain_error);
}

TEST_CASE("single component reduces to gamma_log_pdf") {
    std::vector<GammaParams> p{{1.0, 2.0}};
    CHECK(sum_gamma_log_density(1.0, p) ==
          doctest::Approx(std::log(0.5) - 0.5).epsilon(1e-13));
}

TEST_CASE("homogeneous scales collapse to a single Gamma") {
    std::vector<GammaParams> p{{1.0, 1.0}, {1.0, 1.0}};
    // Gamma(2,1) at 1: x e^{-x} = e^{-1}
    CHECK(sum_gamma_log_density(1.0, p) == doctest::Approx(-1.0).epsilon(1e-12));

    std::vector<GammaParams> q{{2.3, 0.7}, {1.9, 0.7}, {0.8, 0.7}};
    const GammaParams merged{5.0, 0.7};
    for (double y : {0.5, 2.0, 6.0})
        CHECK(sum_gamma_log_density(y, q) ==
              doctest::Approx(gamma_log_pdf(y, merged)).epsilon(1e-10));
}

TEST_CASE("heterogeneous pair matches numerical convolution") {
    std::vector<GammaParams> p{{2.0, 1.0}, {3.0, 0.5}};
    const double y = 2.5;
    const double oracle = std::log(oracles::conv_density_2(y, p[0], p[1]));
    CHECK(sum_gamma_log_density(y, p) == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("heterogeneous triple matches 2-D quadrature of the convolution") {
    std::vector<GammaParams> p{{1.5, 2.0}, {2.2, 0.9}, {4.0, 0.35}};
    for (double y : {3.0, 6.5}) {
        const double oracle = std::log(oracles::conv_density_3(y, p[0], p[1], p[2]));
        CHECK(sum_gamma_log_density(y, p) == doctest::Approx(oracle).epsilon(1e-5));
    }
}

TEST_CASE("density integrates to one") {
    std::vector<GammaParams> p{{2.0, 1.5}, {1.2, 0.4}, {3.3, 0.8}};
    const double mass = oracles::integrate(
        [&](double y) { return std::exp(sum_gamma_log_density(y, p)); }, 1e-9, 60.0, 256, 16);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("kappa closed forms") {
    std::vector<GammaParams> one{{1.0, 1.0}};
    CHECK(kappa(one) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    std::vector<GammaParams> two{{1.0, 0.5}, {1.0, 0.5}};
    // Gamma(2, 0.5) density at 1
    CHECK(kappa(two) ==
          doctest::Approx(std::exp(gamma_log_pdf(1.0, {2.0, 0.5}))).epsilon(1e-12));
}

TEST_CASE("kappa against a Monte Carlo kernel density estimate") {
    std::vector<GammaParams> p{{2.0, 0.3}, {1.5, 0.8}, {4.0, 0.1}};
    Rng rng(20240229);
    constexpr std::size_t kDraws = 10000000;
    std::vector<double> sums(kDraws);
    for (auto& s : sums) {
        s = rng.gamma(p[0].k, p[0].theta) + rng.gamma(p[1].k, p[1].theta) +
            rng.gamma(p[2].k, p[2].theta);
    }
    const auto est = oracles::kde_at(sums, 1.0, 0.004);
    const double got = kappa(p);
    // 3 sigma of the KDE noise plus a small smoothing-bias allowance
    CHECK(std::abs(got - est.value) < 3.0 * est.se + 2e-3 * est.value);
}

TEST_CASE("kappa is positive and truncation error stays within rel_tol") {
    Rng rng(17);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 2 + rng.uniform_index(5);
        std::vector<GammaParams> p(n);
        for (auto& c : p) c = {0.3 + 5.0 * rng.uniform(), 0.1 + 2.0 * rng.uniform()};
        SeriesConfig loose;
        loose.rel_tol = 1e-8;
        SeriesConfig tight;
        tight.rel_tol = 1e-13;
        const double a = kappa(p, loose);
        const double b = kappa(p, tight);
        CHECK(a > 0.0);
        // a looser tolerance may truncate earlier but never beyond its bound
        CHECK(std::abs(a - b) <= 1e-7 * std::max(a, b));
    }
}

TEST_CASE("series terminates for large total shape") {
    std::vector<GammaParams> p{{40.0, 0.5}, {40.0, 0.8}, {40.0, 1.1}, {40.0, 1.7}, {40.0, 2.0}};
    double rho = 0.0;
    for (const auto& c : p) rho += c.k;
    CHECK(rho == doctest::Approx(200.0));
    const double y = 200.0 * 1.2;  // near the mean
    CHECK(std::isfinite(sum_gamma_log_density(y, p)));
}

TEST_CASE("non-convergence carries partial sum and term count") {
    std::vector<GammaParams> p{{2.0, 1.0}, {3.0, 0.01}};
    SeriesConfig tight;
    tight.max_terms = 3;
    try {
        sum_gamma_log_density(2.0, p, tight);
        FAIL("expected SeriesError");
    } catch (const SeriesError& e) {
        CHECK(e.terms() == 3);
        CHECK(std::isfinite(e.partial_log_sum()));
    }
}

TEST_CASE("input validation") {
    std::vector<GammaParams> p{{1.0, 1.0}};
    CHECK_THROWS_AS(sum_gamma_log_density(0.0, p), std::domain_error);
    CHECK_THROWS_AS(sum_gamma_log_density(1.0, {}), std::domain_error);
    SeriesConfig bad;
    bad.rel_tol = 2.0;
    CHECK_THROWS_AS(sum_gamma_log_density(1.0, p, bad), std::domain_error);
}

TEST_CASE("weighted_sum_log_density rescales the components") {
    std::vector<GammaParams> p{{2.0, 3.0}};
    std::vector<double> alpha{0.5};
    // alpha*X ~ Gamma(2, 1.5)
    CHECK(weighted_sum_log_density(2.0, alpha, p) ==
          doctest::Approx(gamma_log_pdf(2.0, {2.0, 1.5})).epsilon(1e-13));
}

TEST_SUITE_END();
