#pragma once

#include <cstddef>
#include <functional>

namespace thermoseer {

/// Worker count honoring THERMOSEER_THREADS (0 or unset = hardware concurrency).
unsigned thread_cap();

/// Runs body(i) for i in [0, count) over at most thread_cap() threads.
/// Each index is processed exactly once; results must not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace thermoseer
