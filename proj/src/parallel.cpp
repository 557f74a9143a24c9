#include "z2neck/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace z2neck {

int thread_count()
{
    if (const char* env = std::getenv("Z2NECK_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {
// threads available to a nested call made from a worker; 0 outside any pool
thread_local int nested_share = 0;
}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads)
{
    if (threads <= 0) threads = thread_count();
    if (nested_share > 0) threads = std::min(threads, nested_share);
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex guard;
    int share = std::max(1, threads / static_cast<int>(workers));
    auto work = [&] {
        nested_share = share;
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(guard);
                if (!first) first = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace z2neck
