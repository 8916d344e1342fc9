// Copyright 2026 The MixFaceNet Engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Image-level parallelism. MFN_THREADS (default 1) caps the worker count.
// Work items are whole images and no floating-point value ever combines
// across workers, so results are bitwise independent of the thread count.

#ifndef MFN_THREADING_HPP_
#define MFN_THREADING_HPP_

#include <cstdint>
#include <functional>

namespace mfn {

// Worker cap from MFN_THREADS; unset or empty means 1. Re-read on every
// call. Throws ConfigError on values that are not positive integers.
int64_t thread_count();

// Runs fn(0..n-1), distributing indices over min(thread_count(), n)
// workers. The first exception thrown by any item is rethrown after all
// workers finish.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace mfn

#endif  // MFN_THREADING_HPP_
