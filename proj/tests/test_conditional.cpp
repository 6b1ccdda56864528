#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "linktt/gamma/conditional.hpp"
#include "linktt/gamma/density.hpp"
#include "linktt/rng.hpp"
#include "oracles.hpp"

using namespace linktt::gamma;
using linktt::Rng;

TEST_SUITE_BEGIN("conditional");

TEST_CASE("n = 1 is pinned by the constraint") {
    Rng rng(7);
    std::vector<double> alpha{2.0};
    std::vector<GammaParams> p{{3.0, 1.0}};
    for (int i = 0; i < 5; ++i) {
        auto s = sample_conditional(alpha, 10.0, p, rng);
        CHECK(s.point.z[0] == doctest::Approx(5.0).epsilon(1e-12));
    }
}

TEST_CASE("samples satisfy the hyperplane constraint exactly") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(8);
        std::vector<double> alpha(n);
        std::vector<GammaParams> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            alpha[i] = 0.1 + 4.9 * rng.uniform();
            p[i] = GammaParams{0.1 + 9.9 * rng.uniform(), 0.1 + 9.9 * rng.uniform()};
        }
        const double d = 0.1 + 99.9 * rng.uniform();
        auto s = sample_conditional(alpha, d, p, rng);
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(s.point.z[i] > 0.0);
            dot += alpha[i] * s.point.z[i];
        }
        CHECK(std::abs(dot - d) <= 1e-9 * d);
        CHECK_NOTHROW(s.point.check());
    }
}

TEST_CASE("homogeneous case: marginal is the Dirichlet Beta marginal") {
    // alpha = 1, d = 1, equal params: z1 ~ Beta(k, (n-1)k)
    const double k = 2.5;
    std::vector<double> alpha{1.0, 1.0, 1.0};
    std::vector<GammaParams> p{{k, 0.7}, {k, 0.7}, {k, 0.7}};
    Rng rng(314159);
    constexpr std::size_t kDraws = 200000;
    std::vector<double> z1(kDraws);
    for (auto& v : z1) v = sample_conditional(alpha, 1.0, p, rng).point.z[0];
    const double ks = oracles::ks_statistic(
        std::move(z1), [&](double x) { return oracles::beta_cdf(x, k, 2.0 * k); });
    CHECK(ks < 0.004);  // ~4.4 sigma at this sample size
}

TEST_CASE("heterogeneous alpha with equal alpha*theta is still exact") {
    // theta_hat homogeneous <=> alpha_i theta_i all equal; weights collapse
    std::vector<double> alpha{2.0, 1.0};
    std::vector<GammaParams> p{{1.7, 0.5}, {2.4, 1.0}};
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        auto s = sample_conditional(alpha, 3.0, p, rng);
        const double lw = importance_log_weight(s.point.z, p);
        // constant in z when the construction is exact
        auto s2 = sample_conditional(alpha, 3.0, p, rng);
        const double lw2 = importance_log_weight(s2.point.z, p);
        CHECK(lw == doctest::Approx(lw2).epsilon(1e-9));
    }
}

TEST_CASE("proposal density consistency: shortcut weight equals target minus proposal") {
    std::vector<double> alpha{1.0, 2.0, 0.7};
    std::vector<GammaParams> p{{2.0, 0.5}, {1.2, 1.5}, {3.1, 0.9}};
    const double d = 4.0;
    Rng rng(2718);
    double ref = 0.0;
    bool have_ref = false;
    for (int i = 0; i < 40; ++i) {
        auto s = sample_conditional(alpha, d, p, rng);
        const double target = conditional_log_density(s.point, p);
        const double shortcut = importance_log_weight(s.point.z, p);
        // target - proposal - shortcut must be a constant of the instance
        const double c = target - s.proposal_log_density - shortcut;
        if (!have_ref) {
            ref = c;
            have_ref = true;
        } else {
            CHECK(c == doctest::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("proposal density integrates to one over the simplex (n = 2)") {
    std::vector<double> alpha{2.0, 1.0};
    std::vector<GammaParams> p{{2.0, 0.5}, {1.5, 1.0}};
    const double d = 3.0;
    // evaluate the proposal density through the identity
    // proposal = target - shortcut - c, with target and c computed per point
    Rng rng(5);
    auto s0 = sample_conditional(alpha, d, p, rng);
    const double c = conditional_log_density(s0.point, p) -
                     importance_log_weight(s0.point.z, p) - s0.proposal_log_density;
    auto proposal_log_density = [&](std::span<const double> z) {
        SimplexPoint pt;
        pt.z.assign(z.begin(), z.end());
        pt.alpha = alpha;
        pt.d = d;
        return conditional_log_density(pt, p) - importance_log_weight(z, p) - c;
    };
    const double mass = oracles::simplex_integral_2(alpha, d, proposal_log_density);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("conditional density: n = 1 is rejected") {
    SimplexPoint pt;
    pt.z = {2.0};
    pt.alpha = {1.0};
    pt.d = 2.0;
    std::vector<GammaParams> p{{1.0, 1.0}};
    CHECK_THROWS_AS(conditional_log_density(pt, p), std::domain_error);
}

TEST_CASE("conditional density is constant for symmetric exponentials") {
    std::vector<GammaParams> p{{1.0, 1.0}, {1.0, 1.0}};
    SimplexPoint a;
    a.z = {0.3, 0.7};
    a.alpha = {1.0, 1.0};
    a.d = 1.0;
    SimplexPoint b;
    b.z = {0.6, 0.4};
    b.alpha = {1.0, 1.0};
    b.d = 1.0;
    CHECK(conditional_log_density(a, p) ==
          doctest::Approx(conditional_log_density(b, p)).epsilon(1e-12));
}

TEST_CASE("conditional density integrates to one (n = 2)") {
    std::vector<double> alpha{2.0, 1.0};
    std::vector<GammaParams> p{{2.0, 0.5}, {1.0, 1.0}};
    const double d = 3.0;
    auto log_density = [&](std::span<const double> z) {
        SimplexPoint pt;
        pt.z.assign(z.begin(), z.end());
        pt.alpha = alpha;
        pt.d = d;
        return conditional_log_density(pt, p);
    };
    const double mass = oracles::simplex_integral_2(alpha, d, log_density);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("conditional density integrates to one (n = 3)") {
    std::vector<double> alpha{1.0, 0.6, 1.4};
    std::vector<GammaParams> p{{2.2, 0.8}, {1.5, 1.1}, {3.0, 0.4}};
    const double d = 4.0;
    auto log_density = [&](std::span<const double> z) {
        SimplexPoint pt;
        pt.z.assign(z.begin(), z.end());
        pt.alpha = alpha;
        pt.d = d;
        return conditional_log_density(pt, p);
    };
    const double mass = oracles::simplex_integral_3(alpha, d, log_density);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("conditional density is permutation invariant") {
    std::vector<GammaParams> p{{2.0, 0.5}, {1.2, 1.5}, {3.1, 0.9}};
    SimplexPoint pt;
    pt.z = {1.0, 0.5, 2.0};
    pt.alpha = {1.0, 2.0, 0.5};
    pt.d = 1.0 * 1.0 + 2.0 * 0.5 + 0.5 * 2.0;
    const double base = conditional_log_density(pt, p);

    std::vector<GammaParams> p2{p[2], p[0], p[1]};
    SimplexPoint pt2;
    pt2.z = {pt.z[2], pt.z[0], pt.z[1]};
    pt2.alpha = {pt.alpha[2], pt.alpha[0], pt.alpha[1]};
    pt2.d = pt.d;
    CHECK(conditional_log_density(pt2, p2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("importance-weighted moments match the rejection oracle (n = 2)") {
    std::vector<double> alpha{1.0, 2.0};
    std::vector<GammaParams> p{{2.0, 1.0}, {3.0, 0.5}};
    // d near the prior mean of alpha^T X keeps the oracle acceptance workable
    const double d = 4.5;

    Rng rng_rej(1001);
    auto oracle = oracles::rejection_conditional_moments(alpha, d, p, 1e-3, 20000, rng_rej);

    Rng rng_is(2002);
    constexpr std::size_t kDraws = 200000;
    std::vector<double> z0(kDraws), z1(kDraws), lw(kDraws);
    for (std::size_t i = 0; i < kDraws; ++i) {
        auto s = sample_conditional(alpha, d, p, rng_is);
        z0[i] = s.point.z[0];
        z1[i] = s.point.z[1];
        lw[i] = importance_log_weight(s.point.z, p);
    }
    const auto m0 = oracles::weighted_mean(z0, lw);
    const auto m1 = oracles::weighted_mean(z1, lw);
    CHECK(std::abs(m0.value - oracle.mean[0]) <
          3.0 * std::sqrt(m0.se * m0.se + oracle.mean_se[0] * oracle.mean_se[0]));
    CHECK(std::abs(m1.value - oracle.mean[1]) <
          3.0 * std::sqrt(m1.se * m1.se + oracle.mean_se[1] * oracle.mean_se[1]));
}

TEST_CASE("paper-faithful weights are biased away from the oracle when theta_hat varies") {
    // documents why the importance correction exists: with heterogeneous
    // alpha*theta the uncorrected construction is a different distribution
    std::vector<double> alpha{1.0, 1.0};
    std::vector<GammaParams> p{{2.0, 3.0}, {2.0, 0.3}};
    const double d = 5.0;

    Rng rng_rej(77);
    auto oracle = oracles::rejection_conditional_moments(alpha, d, p, 1e-3, 20000, rng_rej);

    Rng rng_is(78);
    constexpr std::size_t kDraws = 100000;
    double uncorrected = 0.0;
    std::vector<double> z0(kDraws), lw(kDraws);
    for (std::size_t i = 0; i < kDraws; ++i) {
        auto s = sample_conditional(alpha, d, p, rng_is);
        uncorrected += s.point.z[0];
        z0[i] = s.point.z[0];
        lw[i] = importance_log_weight(s.point.z, p);
    }
    uncorrected /= kDraws;
    const auto corrected = oracles::weighted_mean(z0, lw);
    CHECK(std::abs(corrected.value - oracle.mean[0]) <
          3.0 * std::sqrt(corrected.se * corrected.se +
                          oracle.mean_se[0] * oracle.mean_se[0]));
    CHECK(std::abs(uncorrected - oracle.mean[0]) >
          5.0 * std::sqrt(oracle.mean_se[0] * oracle.mean_se[0] + 1e-8));
}

TEST_SUITE_END();
