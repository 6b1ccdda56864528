#include "linktt/stream/pool.hpp"

#include <atomic>
#include <memory>
#include <stdexcept>

namespace linktt::stream {

ThreadPool::ThreadPool(std::size_t workers) {
    if (workers < 1) throw std::domain_error("ThreadPool: need at least one worker");
    threads_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i)
        threads_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lk(mu_);
        stop_ = true;
    }
    cv_task_.notify_all();
    for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lk(mu_);
            cv_task_.wait(lk, [this] { return stop_ || !tasks_.empty(); });
            if (stop_ && tasks_.empty()) return;
            task = std::move(tasks_.front());
            tasks_.pop_front();
        }
        task();
        {
            std::lock_guard lk(mu_);
            --in_flight_;
        }
        cv_done_.notify_all();
    }
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (n == 1) {
        fn(0);
        return;
    }
    auto first_error = std::make_shared<std::atomic<bool>>(false);
    auto error_ptr = std::make_shared<std::exception_ptr>();
    {
        std::lock_guard lk(mu_);
        in_flight_ += n;
        for (std::size_t i = 0; i < n; ++i) {
            tasks_.emplace_back([i, &fn, first_error, error_ptr] {
                try {
                    fn(i);
                } catch (...) {
                    bool expected = false;
                    if (first_error->compare_exchange_strong(expected, true))
                        *error_ptr = std::current_exception();
                }
            });
        }
    }
    cv_task_.notify_all();
    {
        std::unique_lock lk(mu_);
        cv_done_.wait(lk, [this] { return in_flight_ == 0; });
    }
    if (*first_error) std::rethrow_exception(*error_ptr);
}

} // namespace linktt::stream
