#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "linktt/rng.hpp"
#include "linktt/stream/batch.hpp"
#include "linktt/stream/pool.hpp"

// Micro-batch operator graph: a stream is a lazily-described series of
// interval datasets; operators are deterministic per-interval computations
// over the parents' batches. Stateless operators may run sharded across the
// worker pool; stateful operator state is owned by the scheduler thread.

namespace linktt::stream {

struct SchedulerConfig {
    double interval_s = 5.0;
    double deadline_s = 5.0;  // soft budget per interval
    std::size_t workers = 1;
    std::size_t shards = 8;
    bool live_pacing = false;       // sleep to align intervals with wall time
    std::int64_t retain_intervals = 8;  // <0 keeps every batch (tests)

    void check() const {
        if (!(interval_s > 0.0)) throw std::domain_error("SchedulerConfig: interval must be > 0");
        if (!(deadline_s > 0.0)) throw std::domain_error("SchedulerConfig: deadline must be > 0");
        if (workers < 1) throw std::domain_error("SchedulerConfig: workers must be >= 1");
        if (shards < 1) throw std::domain_error("SchedulerConfig: shards must be >= 1");
    }
};

struct BatchMetrics {
    std::int64_t interval_index = 0;
    double interval_start = 0.0;
    std::size_t records_in = 0;
    std::size_t records_out = 0;
    double processing_time_s = 0.0;
    bool deadline_missed = false;
    std::size_t failures = 0;
};

// Stable sharding hashes (never std::hash, whose values may differ per build).
inline std::uint64_t shard_hash(const std::string& s) { return fnv1a64(s); }
template <class I, std::enable_if_t<std::is_integral_v<I>, int> = 0>
std::uint64_t shard_hash(I v) {
    return mix64(static_cast<std::uint64_t>(v));
}
template <class A, class B>
std::uint64_t shard_hash(const std::pair<A, B>& p) {
    return shard_hash(p.first);
}

struct ExecContext {
    ThreadPool* pool = nullptr;
    std::size_t shards = 1;
    std::size_t failures = 0;   // user-function failures this interval
    std::size_t records_out = 0;  // records delivered to sinks this interval
};

class Pipeline;

class NodeBase {
public:
    explicit NodeBase(std::string name) : name_(std::move(name)) {}
    virtual ~NodeBase() = default;

    virtual void compute(std::int64_t k, ExecContext& ctx) = 0;
    virtual void prune_before(std::int64_t k) = 0;
    virtual void clear_all() = 0;
    virtual void reset_state() {}
    virtual std::int64_t parent_lookback() const { return 1; }

    const std::string& name() const { return name_; }
    const std::vector<NodeBase*>& parents() const { return parents_; }
    bool is_sink() const { return is_sink_; }

protected:
    std::vector<NodeBase*> parents_;
    std::string name_;
    bool is_sink_ = false;
    friend class Pipeline;
};

template <class T>
class Node : public NodeBase {
public:
    using NodeBase::NodeBase;

    const MicroBatch<T>& batch(std::int64_t k) const {
        auto it = out_.find(k);
        if (it == out_.end())
            throw std::runtime_error(name_ + ": no batch for interval " + std::to_string(k));
        return it->second;
    }
    bool has_batch(std::int64_t k) const { return out_.count(k) != 0; }

    void prune_before(std::int64_t k) override {
        out_.erase(out_.begin(), out_.lower_bound(k));
    }
    void clear_all() override { out_.clear(); }

protected:
    void store(MicroBatch<T> b) { out_[b.interval_index] = std::move(b); }
    std::map<std::int64_t, MicroBatch<T>> out_;
};

// Pull-based record source. pull(k) returns the records of interval k, or
// nullopt once the stream is exhausted (no records at interval k or later).
template <class T>
class Source {
public:
    using record_type = T;
    virtual ~Source() = default;
    virtual std::optional<std::vector<T>> pull(std::int64_t k) = 0;
    virtual double start_time() const { return 0.0; }
};

namespace detail {

template <class T>
struct is_pair : std::false_type {};
template <class A, class B>
struct is_pair<std::pair<A, B>> : std::true_type {};

template <class T, class KeyFn>
class SourceNode final : public Node<T> {
public:
    SourceNode(std::string name, std::unique_ptr<Source<T>> src, KeyFn key)
        : Node<T>(std::move(name)), src_(std::move(src)), key_(std::move(key)) {}

    bool exhausted() const { return exhausted_; }
    double start_time() const { return src_->start_time(); }

    // Seals the interval's input dataset; returns records_in.
    std::size_t seal(std::int64_t k, double interval_s, ExecContext& ctx) {
        MicroBatch<T> b;
        b.interval_index = k;
        b.interval_start = src_->start_time() + static_cast<double>(k) * interval_s;
        b.interval_length = interval_s;
        b.shards.resize(ctx.shards);
        std::size_t n = 0;
        if (!exhausted_) {
            auto recs = src_->pull(k);
            if (!recs) {
                exhausted_ = true;
            } else {
                n = recs->size();
                for (auto& r : *recs) {
                    const std::size_t s = key_(r) % ctx.shards;
                    b.shards[s].push_back(std::move(r));
                }
            }
        }
        this->store(std::move(b));
        return n;
    }

    void compute(std::int64_t, ExecContext&) override {}  // sealed by the scheduler

private:
    std::unique_ptr<Source<T>> src_;
    KeyFn key_;
    bool exhausted_ = false;
};

template <class In, class Out, class Fn>
class MapLikeNode final : public Node<Out> {
public:
    // fn(record, emit) appends zero or more outputs per record
    MapLikeNode(std::string name, Node<In>* parent, Fn fn)
        : Node<Out>(std::move(name)), fn_(std::move(fn)) {
        this->parents_.push_back(parent);
    }

    void compute(std::int64_t k, ExecContext& ctx) override {
        const auto& in = static_cast<Node<In>*>(this->parents_[0])->batch(k);
        MicroBatch<Out> out;
        out.interval_index = in.interval_index;
        out.interval_start = in.interval_start;
        out.interval_length = in.interval_length;
        out.shards.resize(in.shards.size());
        std::vector<char> failed(in.shards.size(), 0);
        ctx.pool->parallel_for(in.shards.size(), [&](std::size_t s) {
            auto& dst = out.shards[s];
            try {
                for (const auto& rec : in.shards[s])
                    fn_(rec, [&dst](Out o) { dst.push_back(std::move(o)); });
            } catch (...) {
                dst.clear();
                failed[s] = 1;
            }
        });
        for (char f : failed) ctx.failures += f;
        this->store(std::move(out));
    }

private:
    Fn fn_;
};

template <class K, class V>
class GroupByKeyNode final : public Node<std::pair<K, std::vector<V>>> {
public:
    using In = std::pair<K, V>;
    using Out = std::pair<K, std::vector<V>>;

    GroupByKeyNode(std::string name, Node<In>* parent) : Node<Out>(std::move(name)) {
        this->parents_.push_back(parent);
    }

    void compute(std::int64_t k, ExecContext& ctx) override {
        const auto& in = static_cast<Node<In>*>(this->parents_[0])->batch(k);
        const std::size_t p = in.shards.size();
        // phase 1: per input shard, bucket by destination shard
        std::vector<std::vector<std::vector<In>>> buckets(p);
        ctx.pool->parallel_for(p, [&](std::size_t s) {
            buckets[s].resize(p);
            for (const auto& kv : in.shards[s])
                buckets[s][shard_hash(kv.first) % p].push_back(kv);
        });
        // phase 2: per output shard, merge input shards in order and group
        MicroBatch<Out> out;
        out.interval_index = in.interval_index;
        out.interval_start = in.interval_start;
        out.interval_length = in.interval_length;
        out.shards.resize(p);
        ctx.pool->parallel_for(p, [&](std::size_t d) {
            std::map<K, std::vector<V>> groups;
            for (std::size_t s = 0; s < p; ++s)
                for (auto& kv : buckets[s][d]) groups[kv.first].push_back(std::move(kv.second));
            out.shards[d].reserve(groups.size());
            for (auto& [key, vals] : groups) out.shards[d].emplace_back(key, std::move(vals));
        });
        this->store(std::move(out));
    }
};

template <class K, class V>
class RunningReduceNode final : public Node<std::pair<K, V>> {
public:
    using KV = std::pair<K, V>;

    RunningReduceNode(std::string name, Node<KV>* parent, std::function<V(V, V)> op)
        : Node<KV>(std::move(name)), op_(std::move(op)) {
        this->parents_.push_back(parent);
    }

    // State update runs on the scheduler thread (single writer).
    void compute(std::int64_t k, ExecContext& ctx) override {
        const auto& in = static_cast<Node<KV>*>(this->parents_[0])->batch(k);
        for (const auto& shard : in.shards)
            for (const auto& [key, val] : shard) {
                auto it = state_.find(key);
                if (it == state_.end())
                    state_.emplace(key, val);
                else
                    it->second = op_(it->second, val);
            }
        MicroBatch<KV> out;
        out.interval_index = in.interval_index;
        out.interval_start = in.interval_start;
        out.interval_length = in.interval_length;
        out.shards.resize(in.shards.size());
        for (const auto& [key, val] : state_)
            out.shards[shard_hash(key) % in.shards.size()].emplace_back(key, val);
        this->store(std::move(out));
        (void)ctx;
    }

    void reset_state() override { state_.clear(); }

private:
    std::function<V(V, V)> op_;
    std::map<K, V> state_;
};

template <class T>
class WindowNode final : public Node<T> {
public:
    WindowNode(std::string name, Node<T>* parent, std::int64_t length_n, std::int64_t slide_n)
        : Node<T>(std::move(name)), length_n_(length_n), slide_n_(slide_n) {
        this->parents_.push_back(parent);
    }

    std::int64_t parent_lookback() const override { return length_n_; }

    void compute(std::int64_t k, ExecContext&) override {
        auto* parent = static_cast<Node<T>*>(this->parents_[0]);
        const auto& cur = parent->batch(k);
        MicroBatch<T> out = MicroBatch<T>::empty_like(cur);
        if ((k + 1) % slide_n_ == 0) {
            for (std::int64_t j = std::max<std::int64_t>(0, k - length_n_ + 1); j <= k; ++j) {
                const auto& b = parent->batch(j);
                for (std::size_t s = 0; s < b.shards.size(); ++s)
                    out.shards[s].insert(out.shards[s].end(), b.shards[s].begin(),
                                         b.shards[s].end());
            }
        }
        this->store(std::move(out));
    }

private:
    std::int64_t length_n_;
    std::int64_t slide_n_;
};

template <class T>
class SinkNode final : public Node<T> {
public:
    SinkNode(std::string name, Node<T>* parent, std::function<void(const MicroBatch<T>&)> fn)
        : Node<T>(std::move(name)), fn_(std::move(fn)) {
        this->parents_.push_back(parent);
        this->is_sink_ = true;
    }

    void compute(std::int64_t k, ExecContext& ctx) override {
        const auto& in = static_cast<Node<T>*>(this->parents_[0])->batch(k);
        try {
            fn_(in);
            ctx.records_out += in.record_count();
        } catch (...) {
            ++ctx.failures;
        }
    }

private:
    std::function<void(const MicroBatch<T>&)> fn_;
};

}  // namespace detail

} // namespace linktt::stream
