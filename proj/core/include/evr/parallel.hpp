#pragma once

#include <cstddef>
#include <functional>

namespace evr {

// Runs fn(i) for i in [0, n) on up to `workers` threads (striped). The
// first exception thrown by any worker is rethrown on the caller after
// all threads join, so output slots must be pre-sized by the caller.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace evr
