#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace linktt::core {

using LinkIndex = std::int32_t;

// A directed road segment. Node ids are carried as opaque strings; the
// estimator never uses topology.
struct Link {
    std::string id;
    std::string from_node;
    std::string to_node;
    double length_m = 0.0;
    double speed_limit_mps = 0.0;

    void check() const {
        if (!(length_m > 0.0)) throw std::domain_error("Link " + id + ": length_m must be > 0");
        if (!(speed_limit_mps > 0.0))
            throw std::domain_error("Link " + id + ": speed_limit_mps must be > 0");
    }
};

// Directed graph of links; the dense index space of the model.
class RoadNetwork {
public:
    RoadNetwork() = default;
    explicit RoadNetwork(std::vector<Link> links) : links_(std::move(links)) {
        index_.reserve(links_.size());
        for (std::size_t i = 0; i < links_.size(); ++i) {
            links_[i].check();
            auto [it, inserted] =
                index_.emplace(links_[i].id, static_cast<LinkIndex>(i));
            if (!inserted)
                throw std::domain_error("RoadNetwork: duplicate link id " + links_[i].id);
        }
    }

    std::size_t size() const { return links_.size(); }
    const std::vector<Link>& links() const { return links_; }
    const Link& link(LinkIndex i) const { return links_.at(static_cast<std::size_t>(i)); }

    // -1 when the id is unknown.
    LinkIndex index_of(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? -1 : it->second;
    }

private:
    std::vector<Link> links_;
    std::unordered_map<std::string, LinkIndex> index_;
};

// One map-matched reading: a path between two GPS fixes plus its duration.
struct TrajectoryMeasurement {
    std::string id;
    double start_time = 0.0;  // UTC seconds
    double duration_s = 0.0;
    std::vector<std::string> path;  // link ids, in traversal order
    double offset_start_m = 0.0;    // within path.front()
    double offset_end_m = 0.0;      // within path.back()
};

// Sparse path activation vector with the observed duration.
struct Observation {
    std::string id;
    std::vector<std::pair<LinkIndex, double>> weights;  // (link, alpha), alpha in (0,1]
    double duration_s = 0.0;
    double time = 0.0;  // UTC seconds

    std::size_t size() const { return weights.size(); }
};

// Exponential down-weighting by same-day age and whole-week offset; the decay
// constants are set so the weight is terminal_weight at the edge of each
// window.
struct DecayConfig {
    double day_window_s = 7200.0;
    int week_window_count = 10;
    double terminal_weight = 0.2;

    void check() const {
        if (!(day_window_s > 0.0)) throw std::domain_error("DecayConfig: day window must be > 0");
        if (week_window_count < 1)
            throw std::domain_error("DecayConfig: week window count must be >= 1");
        if (!(terminal_weight > 0.0 && terminal_weight < 1.0))
            throw std::domain_error("DecayConfig: terminal weight must be in (0,1)");
    }
};

struct PriorConfig {
    double speed_fraction = 0.7;    // prior mean assumes this fraction of the limit
    double min_stddev_s = 60.0;
    double stddev_fraction = 0.5;   // of the prior mean
};

} // namespace linktt::core
