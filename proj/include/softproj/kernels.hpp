#pragma once

// Data-parallel kernels. Every OpenMP kernel has a serial twin in
// `kernels::serial` that is kept as the reference implementation for tests
// and for the benchmark target.

#include "softproj/linalg.hpp"

#include <cstddef>
#include <functional>

namespace softproj::kernels {

/// Number of worker threads the parallel kernels will use (1 without OpenMP).
int max_threads();

/// H * H^T accumulated over column blocks. Blocks are reduced in a fixed
/// order, so the result does not depend on the thread count.
Matrix gram(const Matrix& H);

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Iterations must
/// be independent; exceptions are captured and the first one (by index) is
/// rethrown after the loop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

namespace serial {

Matrix gram(const Matrix& H);

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace serial

/// Column-block width used by gram(); exposed for tests.
inline constexpr Index kGramBlock = 256;

}  // namespace softproj::kernels
