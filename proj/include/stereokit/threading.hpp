#pragma once

#include <cstdint>
#include <functional>

namespace stereokit {

// Worker count for kernel parallelism. Resolution order: explicit
// set_max_threads() call, then the STEREOKIT_THREADS environment variable,
// then hardware concurrency.
int max_threads();
void set_max_threads(int n);

// Runs fn(begin, end) over a static partition of [0, n). Results must not
// depend on the partition: each index writes disjoint output and every
// per-index accumulation runs in a fixed order, so output is bitwise
// identical for any thread count. Ranges shorter than `grain` run inline.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn,
                  std::int64_t grain = 256);

}  // namespace stereokit
