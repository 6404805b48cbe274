// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <functional>

namespace riskdrift {

/// Worker count used by parallel_for. Defaults to 1.
void set_thread_count(std::size_t n);
[[nodiscard]] std::size_t thread_count();

/// Calls body(i) for i in [0, n). Work is split into contiguous chunks; each
/// index is visited exactly once, so callers that write only to slot i get
/// results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace riskdrift
