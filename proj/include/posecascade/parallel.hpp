#pragma once

#include <cstddef>
#include <functional>

namespace posecascade {

// Runs body(i) for i in [0, n) on up to `threads` threads using contiguous
// static chunks. Bodies must write to disjoint outputs. The first exception
// thrown by any body is rethrown after all threads join.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

// Caps the threads used by the linear-algebra kernels (no-op without
// OpenMP). Results do not depend on the count.
void set_math_threads(int threads);

}  // namespace posecascade
