#pragma once

#include <cstddef>
#include <functional>

namespace viewforge {

/// Global worker cap used by every parallel loop in the library. 0 means
/// "hardware concurrency".
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(i) for i in [begin, end) across up to max_threads() workers
/// using static contiguous chunks. Bodies must only write to per-index
/// state; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

/// Dynamic variant for unevenly sized work items: workers pull indices from
/// a shared counter.
void parallel_for_dynamic(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

} // namespace viewforge
