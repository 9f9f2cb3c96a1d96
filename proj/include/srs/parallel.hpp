#pragma once

#include <cstddef>
#include <functional>

namespace srs {

/// Caps the worker count used by parallel_for; 0 restores the hardware default.
void set_thread_count(std::size_t n) noexcept;
std::size_t thread_count() noexcept;

/// Calls fn(i) for i in [0, n) over contiguous chunks. Callers write only to
/// slot i of preallocated outputs, so results do not depend on the worker
/// count. The first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace srs
