#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace linktt::gamma {

// Shape/scale parameter pair of one Gamma distribution.
struct GammaParams {
    double k = 1.0;      // shape
    double theta = 1.0;  // scale

    double mean() const { return k * theta; }
    double variance() const { return k * theta * theta; }
    double stddev() const { return std::sqrt(variance()); }

    bool valid() const {
        return k > 0.0 && theta > 0.0 && std::isfinite(k) && std::isfinite(theta);
    }
    void check() const {
        if (!valid()) throw std::domain_error("GammaParams: k and theta must be finite and > 0");
    }

    // Gamma with the given first two moments.
    static GammaParams from_moments(double mean, double stddev) {
        if (!(mean > 0.0) || !(stddev > 0.0))
            throw std::domain_error("GammaParams::from_moments: moments must be > 0");
        const double var = stddev * stddev;
        return GammaParams{mean * mean / var, var / mean};
    }
};

inline bool operator==(const GammaParams& a, const GammaParams& b) {
    return a.k == b.k && a.theta == b.theta;
}

using ParamMap = std::unordered_map<std::int32_t, GammaParams>;

// Truncation policy for the infinite series evaluations.
struct SeriesConfig {
    double rel_tol = 1e-12;
    std::size_t max_terms = 100000;

    void check() const {
        if (!(rel_tol > 0.0 && rel_tol < 1.0))
            throw std::domain_error("SeriesConfig: rel_tol must be in (0,1)");
        if (max_terms < 1)
            throw std::domain_error("SeriesConfig: max_terms must be >= 1");
    }
};

// Raised when a series does not converge within max_terms; carries the
// partial log-sum and the number of terms accumulated so far.
class SeriesError : public std::runtime_error {
public:
    SeriesError(std::string_view what, double partial_log_sum, std::size_t terms);
    double partial_log_sum() const { return partial_log_sum_; }
    std::size_t terms() const { return terms_; }

private:
    double partial_log_sum_;
    std::size_t terms_;
};

} // namespace linktt::gamma
