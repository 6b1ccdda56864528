#pragma once

#include "linktt/core/types.hpp"
#include "linktt/gamma/params.hpp"

namespace linktt::gamma {

class MissingParamsError : public std::runtime_error {
public:
    explicit MissingParamsError(core::LinkIndex link)
        : std::runtime_error("no parameters for link index " + std::to_string(link)),
          link_(link) {}
    core::LinkIndex link() const { return link_; }

private:
    core::LinkIndex link_;
};

// Log-density of sum_l alpha(l) * X_l at the observed duration, with
// X_l ~ Gamma(params[l]); the per-observation likelihood term.
// Throws MissingParamsError naming the first link without parameters.
double path_log_likelihood(const core::Observation& obs, const ParamMap& params,
                           const SeriesConfig& cfg = {});

} // namespace linktt::gamma
