#pragma once

#include <cstddef>
#include <functional>

namespace hlt::trainer {

/// Runs fn(0) ... fn(n - 1) on up to `workers` threads. Tasks must write only
/// to their own output slot; callers merge results in index order, so the
/// worker count never changes what is computed. The first exception thrown by
/// any task (lowest index) is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace hlt::trainer
