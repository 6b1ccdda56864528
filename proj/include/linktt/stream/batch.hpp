#pragma once

#include <cstdint>
#include <vector>

namespace linktt::stream {

// Immutable interval-stamped dataset, partitioned into a fixed number of
// shards. Shard count is a config property (not the worker count), so batch
// contents are identical however many workers process them.
template <class T>
struct MicroBatch {
    std::int64_t interval_index = 0;
    double interval_start = 0.0;
    double interval_length = 0.0;
    std::vector<std::vector<T>> shards;

    std::size_t record_count() const {
        std::size_t n = 0;
        for (const auto& s : shards) n += s.size();
        return n;
    }

    std::vector<T> flatten() const {
        std::vector<T> out;
        out.reserve(record_count());
        for (const auto& s : shards) out.insert(out.end(), s.begin(), s.end());
        return out;
    }

    static MicroBatch empty_like(const MicroBatch& other) {
        MicroBatch b;
        b.interval_index = other.interval_index;
        b.interval_start = other.interval_start;
        b.interval_length = other.interval_length;
        b.shards.resize(other.shards.size());
        return b;
    }
};

} // namespace linktt::stream
