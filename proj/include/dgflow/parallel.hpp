// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace dgflow {

/// Keeps freed blocks in the heap instead of returning them to the OS. The
/// training loops allocate and free the same large matrices every step, and
/// with glibc defaults each of those round-trips through mmap. No-op elsewhere.
void tune_allocator();

/// Worker count from DGFLOW_THREADS, or 1 if unset or invalid.
int default_threads();

/// Splits [0, n) into fixed chunks of `chunk` items and runs fn(begin, end)
/// on each, distributing chunks over `threads` workers. Chunk boundaries do
/// not depend on the worker count. The first exception thrown by any chunk is
/// rethrown after all workers have joined.
void parallel_chunks(std::size_t n, std::size_t chunk, int threads,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace dgflow
