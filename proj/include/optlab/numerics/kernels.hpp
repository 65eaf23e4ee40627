#pragma once

// Dense kernels. The default namespace holds the OpenMP versions used by the
// optimizers; optlab::kernels::serial keeps plain-loop reference versions that
// the tests and the benchmark compare against.
//
// Matrix products accumulate each output entry in ascending k order in both
// versions, so parallel and serial results are bit-identical. Reductions use a
// fixed chunking (independent of the thread count) and are bit-identical to the
// serial loop for inputs no longer than kReduceChunk.

#include <cstddef>
#include <span>

#include "optlab/numerics/matrix.hpp"

namespace optlab::kernels {

inline constexpr std::size_t kParallelGrain = 1 << 14;
inline constexpr std::size_t kReduceChunk = 4096;

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n >= kParallelGrain)
  for (std::ptrdiff_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

/// a·b. Throws ContractViolation on a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without forming the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);
double l2_norm(std::span<const double> x);
double l1_norm(std::span<const double> x);
double frobenius_norm(const Matrix& a);

bool all_finite(std::span<const double> x);

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);
double l1_norm(std::span<const double> x);

}  // namespace serial

}  // namespace optlab::kernels

namespace optlab {
// Spelled at namespace scope as well; these two are used everywhere.
using kernels::frobenius_norm;
using kernels::matmul;
}  // namespace optlab
