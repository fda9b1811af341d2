#pragma once

#include <cstddef>
#include <functional>

namespace tsqrf {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Bodies must write only to their own slot. If any body throws,
/// the exception of the lowest failing index is rethrown after all workers
/// stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

std::size_t resolve_threads(std::size_t requested);

}  // namespace tsqrf
