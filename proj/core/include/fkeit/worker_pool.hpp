#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace fkeit {

/// Runs `task(chunk_index)` for chunk_index in [0, n_chunks) on up to
/// `workers` threads. Tasks write into per-chunk slots owned by the caller;
/// the caller reduces the slots in index order afterwards, so the reduction
/// is independent of the thread schedule. workers <= 1 runs inline.
void run_chunks(std::int64_t n_chunks, int workers,
                const std::function<void(std::int64_t)>& task);

/// Effective worker count: explicit request, FKEIT_WORKERS override, or
/// hardware concurrency when zero.
int resolve_workers(int requested);

}  // namespace fkeit
