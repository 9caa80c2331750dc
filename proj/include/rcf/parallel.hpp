#pragma once

#include "rcf/types.hpp"

#include <functional>

namespace rcf {

/// Number of workers used when a caller passes 0: the hardware concurrency,
/// at least 1.
unsigned default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads (0 means
/// default_workers()). Indices are handed out in increasing order; the first
/// exception thrown by any body is rethrown after all threads have joined.
void parallel_for(Index count, unsigned workers, const std::function<void(Index)>& body);

} // namespace rcf
