#include "linktt/gamma/path_likelihood.hpp"

#include <vector>

#include "linktt/gamma/density.hpp"

namespace linktt::gamma {

double path_log_likelihood(const core::Observation& obs, const ParamMap& params,
                           const SeriesConfig& cfg) {
    if (obs.weights.empty())
        throw std::domain_error("path_log_likelihood: empty observation");
    std::vector<double> alpha;
    std::vector<GammaParams> comp;
    alpha.reserve(obs.size());
    comp.reserve(obs.size());
    for (const auto& [link, a] : obs.weights) {
        auto it = params.find(link);
        if (it == params.end()) throw MissingParamsError(link);
        alpha.push_back(a);
        comp.push_back(it->second);
    }
    return weighted_sum_log_density(obs.duration_s, alpha, comp, cfg);
}

} // namespace linktt::gamma
