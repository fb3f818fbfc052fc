#pragma once

#include <cstddef>
#include <functional>

namespace ldm {

/// Worker count: LDM_WORKERS env var if set, else hardware concurrency (>= 1).
int default_workers();

// Static block partition over [0, n). fn(i) must only touch state owned by
// index i; results are then independent of the worker count.
void parallel_for(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& fn,
                  int workers = 0);

}  // namespace ldm
