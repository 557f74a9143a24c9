#pragma once

#include <cstddef>
#include <functional>

namespace z2neck {

// Z2NECK_THREADS if set, otherwise the hardware concurrency
int thread_count();

// runs fn(i) for i in [0, n); each index is handled exactly once, the first exception is rethrown;
// a call made from inside a worker gets that worker's share of the threads
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

}  // namespace z2neck
