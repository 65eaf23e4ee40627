#include "optlab/numerics/kernels.hpp"

#include <cmath>
#include <vector>

#include "optlab/error.hpp"

namespace optlab::kernels {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}

bool worth_threading(std::size_t m, std::size_t n, std::size_t k) {
  return m > 1 && m * n * k >= (std::size_t{1} << 15);
}

// Fixed-chunk reduction: partial sums per chunk, then summed in chunk order.
template <class Term>
double chunked_sum(std::size_t n, Term term) {
  if (n <= kReduceChunk) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += term(i);
    return s;
  }
  const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> partial(chunks, 0.0);
  const auto count = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static) if (n >= kParallelGrain)
  for (std::ptrdiff_t c = 0; c < count; ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    const std::size_t hi = std::min(n, lo + kReduceChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: a.cols != b.rows");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix c(m, n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (worth_threading(m, n, k))
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* ci = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* bp = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: a.rows != b.rows");
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Matrix c(m, n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (worth_threading(m, n, k))
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* ci = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = pa[p * m + i];
      const double* bp = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: a.cols != b.cols");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Matrix c(m, n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (worth_threading(m, n, k))
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* ai = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      pc[i * n + j] = s;
    }
  }
  return c;
}

double dot(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "dot: length mismatch");
  return chunked_sum(x.size(), [&](std::size_t i) { return x[i] * y[i]; });
}

double sum_squares(std::span<const double> x) {
  return chunked_sum(x.size(), [&](std::size_t i) { return x[i] * x[i]; });
}

double l2_norm(std::span<const double> x) { return std::sqrt(sum_squares(x)); }

double l1_norm(std::span<const double> x) {
  return chunked_sum(x.size(), [&](std::size_t i) { return std::abs(x[i]); });
}

double frobenius_norm(const Matrix& a) { return l2_norm(a.values()); }

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: a.cols != b.rows");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: a.rows != b.rows");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: a.cols != b.cols");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) = s;
    }
  return c;
}

double dot(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double sum_squares(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double l1_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

}  // namespace serial
}  // namespace optlab::kernels
