#include "viewforge/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace viewforge {

namespace {

std::atomic<unsigned> g_max_threads{0};

unsigned worker_count(std::size_t items) {
    unsigned n = g_max_threads.load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, items));
}

template <typename Worker>
void run_workers(unsigned workers, Worker&& worker) {
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                worker(w);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace

void set_max_threads(unsigned n) { g_max_threads.store(n); }

unsigned max_threads() {
    const unsigned n = g_max_threads.load();
    return n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n;
}

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body) {
    if (end <= begin) return;
    const std::size_t items = end - begin;
    const unsigned workers = worker_count(items);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    const std::size_t chunk = (items + workers - 1) / workers;
    run_workers(workers, [&](unsigned w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) body(i);
    });
}

void parallel_for_dynamic(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body) {
    if (end <= begin) return;
    const unsigned workers = worker_count(end - begin);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{begin};
    run_workers(workers, [&](unsigned) {
        for (std::size_t i = next.fetch_add(1); i < end; i = next.fetch_add(1)) body(i);
    });
}

} // namespace viewforge
