#pragma once

#include <functional>

namespace trmc {

/// 0 -> hardware concurrency (at least 1); otherwise the request, clamped to >= 1.
int resolve_threads(int requested);

/// Runs fn(0), ..., fn(n-1) across up to `threads` workers. Tasks must be
/// independent; any task ordering yields the same result by construction.
void parallel_for_index(int n, int threads, const std::function<void(int)>& fn);

}  // namespace trmc
