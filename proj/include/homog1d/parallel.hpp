#pragma once

// Minimal fork-join helper.  Tasks are identified by index and pull work from
// a shared atomic counter; callers keep per-task results in preallocated
// arrays indexed by task id and reduce them in index order afterwards, which
// keeps every reduction bit-identical regardless of the thread count.

#include <cstddef>
#include <functional>

namespace homog {

unsigned default_thread_count();

// Runs body(0) .. body(n_tasks-1) on up to n_threads worker threads
// (n_threads == 0 or 1 executes inline).  The first exception thrown by any
// task is rethrown to the caller after all workers finish.
void parallel_for(std::size_t n_tasks, unsigned n_threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace homog
