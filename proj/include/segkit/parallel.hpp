#pragma once

#include <cstdint>
#include <functional>

namespace segkit {

// Runs fn(0..n-1) on up to `jobs` worker threads. Work items are
// claimed from an atomic counter; the first exception is rethrown on
// the calling thread after all workers join. jobs <= 1 runs inline.
void parallel_for(std::int64_t n, int jobs, const std::function<void(std::int64_t)>& fn);

int default_jobs();  // logical CPU count, at least 1

}  // namespace segkit
