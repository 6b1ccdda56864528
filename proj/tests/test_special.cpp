#include <cmath>
#include <initializer_list>
#include <stdexcept>

#include <doctest.h>

#include "linktt/gamma/special.hpp"

using namespace linktt::gamma;

TEST_SUITE_BEGIN("special");

TEST_CASE("log_gamma matches the standard library across the useful range") {
    // std::lgamma is an independent implementation path
    for (double x : {1e-6, 0.01, 0.3, 0.5, 0.99, 1.0, 1.5, 2.0, 4.2, 10.0, 37.7, 100.0, 250.0,
                     1e4, 1e7}) {
        const double ref = std::lgamma(x);
        const double got = log_gamma(x);
        const double tol = 1e-12 * std::max(1.0, std::abs(ref));
        CHECK(std::abs(got - ref) <= tol);
    }
}

TEST_CASE("log_gamma exact points") {
    CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-14));
    CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-13));
}

TEST_CASE("digamma satisfies the recurrence and known values") {
    constexpr double kEulerGamma = 0.57721566490153286;
    CHECK(digamma(1.0) == doctest::Approx(-kEulerGamma).epsilon(1e-12));
    CHECK(digamma(0.5) == doctest::Approx(-kEulerGamma - 2.0 * std::log(2.0)).epsilon(1e-12));
    for (double x : {0.1, 0.7, 1.3, 3.9, 25.0, 400.0}) {
        CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-11));
    }
}

TEST_CASE("digamma is the derivative of log_gamma (finite differences)") {
    for (double x : {0.4, 1.1, 2.7, 8.0, 55.0}) {
        const double h = 1e-6 * std::max(1.0, x);
        const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h);
        CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("trigamma known values and recurrence") {
    CHECK(trigamma(1.0) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-12));
    CHECK(trigamma(0.5) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-12));
    for (double x : {0.2, 1.8, 6.5, 120.0}) {
        CHECK(trigamma(x) - trigamma(x + 1.0) == doctest::Approx(1.0 / (x * x)).epsilon(1e-11));
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
    CHECK_THROWS_AS(digamma(-1.0), std::domain_error);
    CHECK_THROWS_AS(trigamma(0.0), std::domain_error);
}

TEST_SUITE_END();
