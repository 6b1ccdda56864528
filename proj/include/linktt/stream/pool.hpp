#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace linktt::stream {

// Fixed-size worker pool. Tasks are submitted from a driver thread that is
// never itself a worker, so blocking waits from the driver cannot deadlock.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t workers);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t worker_count() const { return threads_.size(); }

    // Runs fn(i) for i in [0, n), blocking until all complete. The first
    // exception thrown by any task is rethrown here. Partitioning is by index,
    // so results written to index-addressed slots are deterministic regardless
    // of worker count.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

private:
    void worker_loop();

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_task_;
    std::condition_variable cv_done_;
    std::deque<std::function<void()>> tasks_;
    std::size_t in_flight_ = 0;
    bool stop_ = false;
};

} // namespace linktt::stream
