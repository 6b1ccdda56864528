#pragma once

#include <chrono>
#include <cmath>
#include <thread>

#include "linktt/stream/dstream.hpp"

namespace linktt::stream {

template <class T>
class DStream;

// Owns the operator graph, the worker pool, and the per-interval scheduler.
// Nodes are created through DStream handles; creation order is a topological
// order by construction, so execution just walks the node list.
class Pipeline {
public:
    explicit Pipeline(SchedulerConfig cfg) : cfg_(cfg), pool_(cfg.workers) {
        cfg_.check();
    }

    const SchedulerConfig& config() const { return cfg_; }
    ThreadPool& pool() { return pool_; }

    template <class T, class KeyFn>
    DStream<T> source(std::unique_ptr<Source<T>> src, KeyFn key_fn,
                      std::string name = "source");

    // accepts any concrete Source subtype
    template <class S, class KeyFn,
              class T = typename S::record_type,
              std::enable_if_t<!std::is_same_v<S, Source<T>>, int> = 0>
    DStream<T> source(std::unique_ptr<S> src, KeyFn key_fn, std::string name = "source") {
        return source<T>(std::unique_ptr<Source<T>>(std::move(src)), std::move(key_fn),
                         std::move(name));
    }

    // Runs until every source is exhausted; returns one metrics row per
    // interval. A processing time above the deadline is recorded as a miss
    // and the next interval is simply delayed (no shedding).
    std::vector<BatchMetrics> run();

    // Executes exactly one interval (used by tests and by run()).
    // Returns false once all sources are exhausted and no batch was produced.
    bool step(std::int64_t k, BatchMetrics& m);

    // Test support: drops a node's cached batches and state, recomputes
    // intervals [0, up_to] from its parents' retained batches.
    void recompute_from_lineage(NodeBase* node, std::int64_t up_to) {
        node->clear_all();
        node->reset_state();
        ExecContext ctx{&pool_, cfg_.shards, 0, 0};
        for (std::int64_t j = 0; j <= up_to; ++j) node->compute(j, ctx);
    }

    const std::vector<std::unique_ptr<NodeBase>>& nodes() const { return nodes_; }

private:
    template <class T>
    friend class DStream;

    NodeBase* adopt(std::unique_ptr<NodeBase> n) {
        nodes_.push_back(std::move(n));
        return nodes_.back().get();
    }

    struct SourceHook {
        std::function<std::size_t(std::int64_t, ExecContext&)> seal;
        std::function<bool()> exhausted;
        std::function<double()> start_time;
    };

    SchedulerConfig cfg_;
    ThreadPool pool_;
    std::vector<std::unique_ptr<NodeBase>> nodes_;
    std::vector<SourceHook> sources_;
};

// Handle to a node of the operator graph; cheap to copy.
template <class T>
class DStream {
public:
    DStream() = default;
    DStream(Pipeline* p, Node<T>* n) : pipe_(p), node_(n) {}

    Node<T>* node() const { return node_; }

    template <class F>
    auto map(F fn, std::string name = "map") const {
        using U = std::invoke_result_t<F, const T&>;
        auto wrapped = [fn = std::move(fn)](const T& rec, auto&& emit) { emit(fn(rec)); };
        auto* n = new detail::MapLikeNode<T, U, decltype(wrapped)>(std::move(name), node_,
                                                                   std::move(wrapped));
        pipe_->adopt(std::unique_ptr<NodeBase>(n));
        return DStream<U>(pipe_, n);
    }

    template <class F>
    auto flat_map(F fn, std::string name = "flat_map") const {
        using Vec = std::invoke_result_t<F, const T&>;
        using U = typename Vec::value_type;
        auto wrapped = [fn = std::move(fn)](const T& rec, auto&& emit) {
            for (auto& v : fn(rec)) emit(std::move(v));
        };
        auto* n = new detail::MapLikeNode<T, U, decltype(wrapped)>(std::move(name), node_,
                                                                   std::move(wrapped));
        pipe_->adopt(std::unique_ptr<NodeBase>(n));
        return DStream<U>(pipe_, n);
    }

    DStream<T> filter(std::function<bool(const T&)> pred, std::string name = "filter") const {
        auto wrapped = [pred = std::move(pred)](const T& rec, auto&& emit) {
            if (pred(rec)) emit(rec);
        };
        auto* n = new detail::MapLikeNode<T, T, decltype(wrapped)>(std::move(name), node_,
                                                                   std::move(wrapped));
        pipe_->adopt(std::unique_ptr<NodeBase>(n));
        return DStream<T>(pipe_, n);
    }

    template <class U = T, std::enable_if_t<detail::is_pair<U>::value, int> = 0>
    auto group_by_key(std::string name = "group_by_key") const {
        using K = typename U::first_type;
        using V = typename U::second_type;
        auto* n = new detail::GroupByKeyNode<K, V>(std::move(name), node_);
        pipe_->adopt(std::unique_ptr<NodeBase>(n));
        return DStream<std::pair<K, std::vector<V>>>(pipe_, n);
    }

    template <class U = T, std::enable_if_t<detail::is_pair<U>::value, int> = 0>
    DStream<T> running_reduce(std::function<typename U::second_type(
                                  typename U::second_type, typename U::second_type)>
                                  op,
                              std::string name = "running_reduce") const {
        using K = typename U::first_type;
        using V = typename U::second_type;
        auto* n = new detail::RunningReduceNode<K, V>(std::move(name), node_, std::move(op));
        pipe_->adopt(std::unique_ptr<NodeBase>(n));
        return DStream<T>(pipe_, n);
    }

    DStream<T> window(double length_s, double slide_s, std::string name = "window") const {
        const double base = pipe_->config().interval_s;
        const double ln = length_s / base;
        const double sn = slide_s / base;
        if (std::abs(ln - std::round(ln)) > 1e-9 || std::abs(sn - std::round(sn)) > 1e-9 ||
            ln < 1.0 || sn < 1.0)
            throw std::domain_error("window: length and slide must be multiples of the interval");
        auto* n = new detail::WindowNode<T>(std::move(name), node_,
                                            static_cast<std::int64_t>(std::llround(ln)),
                                            static_cast<std::int64_t>(std::llround(sn)));
        pipe_->adopt(std::unique_ptr<NodeBase>(n));
        return DStream<T>(pipe_, n);
    }

    void for_each_batch(std::function<void(const MicroBatch<T>&)> sink,
                        std::string name = "sink") const {
        auto* n = new detail::SinkNode<T>(std::move(name), node_, std::move(sink));
        pipe_->adopt(std::unique_ptr<NodeBase>(n));
    }

private:
    Pipeline* pipe_ = nullptr;
    Node<T>* node_ = nullptr;
};

template <class T, class KeyFn>
DStream<T> Pipeline::source(std::unique_ptr<Source<T>> src, KeyFn key_fn, std::string name) {
    auto* n = new detail::SourceNode<T, KeyFn>(std::move(name), std::move(src),
                                               std::move(key_fn));
    adopt(std::unique_ptr<NodeBase>(n));
    sources_.push_back(SourceHook{
        [n, this](std::int64_t k, ExecContext& ctx) { return n->seal(k, cfg_.interval_s, ctx); },
        [n] { return n->exhausted(); },
        [n] { return n->start_time(); },
    });
    return DStream<T>(this, n);
}

inline bool Pipeline::step(std::int64_t k, BatchMetrics& m) {
    ExecContext ctx{&pool_, cfg_.shards, 0, 0};
    m = BatchMetrics{};
    m.interval_index = k;

    bool all_exhausted = true;
    std::size_t records_in = 0;
    for (auto& s : sources_) {
        if (!s.exhausted()) {
            records_in += s.seal(k, ctx);
            if (!s.exhausted()) all_exhausted = false;
        } else {
            s.seal(k, ctx);  // empty batch keeps downstream intervals aligned
        }
    }
    if (all_exhausted && records_in == 0) return false;

    m.interval_start =
        (sources_.empty() ? 0.0 : sources_.front().start_time()) + k * cfg_.interval_s;
    m.records_in = records_in;

    const auto t0 = std::chrono::steady_clock::now();
    for (auto& node : nodes_) {
        if (node->parents().empty()) continue;  // sources are sealed above
        try {
            node->compute(k, ctx);
        } catch (...) {
            ++ctx.failures;
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    m.processing_time_s = std::chrono::duration<double>(t1 - t0).count();
    m.deadline_missed = m.processing_time_s > cfg_.deadline_s;
    m.failures = ctx.failures;
    m.records_out = ctx.records_out;

    if (cfg_.retain_intervals >= 0) {
        for (auto& node : nodes_) {
            std::int64_t keep = cfg_.retain_intervals;
            for (const auto& other : nodes_)
                for (NodeBase* p : other->parents())
                    if (p == node.get()) keep = std::max(keep, other->parent_lookback());
            node->prune_before(k - keep);
        }
    }
    return true;
}

inline std::vector<BatchMetrics> Pipeline::run() {
    std::vector<BatchMetrics> metrics;
    for (std::int64_t k = 0;; ++k) {
        BatchMetrics m;
        if (!step(k, m)) break;
        metrics.push_back(m);
        if (cfg_.live_pacing) {
            const double budget = cfg_.interval_s;
            if (m.processing_time_s < budget)
                std::this_thread::sleep_for(
                    std::chrono::duration<double>(budget - m.processing_time_s));
        }
    }
    return metrics;
}

} // namespace linktt::stream
