#pragma once

#include <cstddef>
#include <functional>

namespace moscolab {

/// 0 means "use hardware concurrency"; anything else is clamped to >= 1.
int resolve_threads(int requested);

/// Runs body(i) for i in [begin, end). With threads > 1 the range is split
/// into contiguous chunks, one worker per chunk. Each index is visited exactly
/// once, so writes to per-index slots are race-free and results do not depend
/// on the schedule.
void parallel_for(std::size_t begin, std::size_t end, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace moscolab
