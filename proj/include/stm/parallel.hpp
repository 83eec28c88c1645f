#pragma once

#include <cstddef>
#include <functional>

namespace stm {

/// Default worker count: STM_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
std::size_t default_thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers. Tasks are
/// claimed dynamically, so `body` must only write to task-private outputs.
/// The first exception thrown by a task is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace stm
