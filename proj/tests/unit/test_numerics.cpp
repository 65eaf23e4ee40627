#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <vector>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"
#include "optlab/numerics/linalg.hpp"
#include "optlab/numerics/matrix.hpp"
#include "optlab/numerics/rng.hpp"

using namespace optlab;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  return Matrix(rows, cols, rng_normal(rng, rows * cols));
}

Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace

TEST(Matmul, IdentityTimesIdentity) { EXPECT_EQ(matmul(Matrix::identity(2), Matrix::identity(2)), Matrix::identity(2)); }

TEST(Matmul, HandArithmetic) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{0}, {1}};
  EXPECT_EQ(matmul(a, b), (Matrix{{2}, {4}}));
}

TEST(Matmul, MatchesNaiveTripleLoopExactly) {
  const Matrix a = random_matrix(5, 3, 1);
  const Matrix b = random_matrix(3, 4, 2);
  EXPECT_EQ(matmul(a, b), naive_product(a, b));
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ContractViolation);
}

TEST(Matmul, ParallelIsBitIdenticalToSerial) {
  // Large enough to cross the threading threshold.
  const Matrix a = random_matrix(96, 80, 3);
  const Matrix b = random_matrix(80, 72, 4);
  const Matrix bt = random_matrix(72, 80, 5);
  const Matrix at = random_matrix(80, 96, 6);
  EXPECT_EQ(kernels::matmul(a, b), kernels::serial::matmul(a, b));
  EXPECT_EQ(kernels::matmul_nt(a, bt), kernels::serial::matmul_nt(a, bt));
  EXPECT_EQ(kernels::matmul_tn(at, b), kernels::serial::matmul_tn(at, b));
}

TEST(Matmul, TransposedVariantsAgreeWithExplicitTranspose) {
  const Matrix a = random_matrix(7, 5, 8);
  const Matrix b = random_matrix(6, 5, 9);
  const Matrix c = random_matrix(7, 4, 10);
  EXPECT_EQ(kernels::matmul_nt(a, b), matmul(a, b.transposed()));
  EXPECT_EQ(kernels::matmul_tn(a, c), matmul(a.transposed(), c));
}

TEST(Reductions, ParallelMatchesSerialUpToChunk) {
  Rng rng(11);
  const std::vector<double> x = rng_normal(rng, kernels::kReduceChunk);
  const std::vector<double> y = rng_normal(rng, kernels::kReduceChunk);
  EXPECT_EQ(kernels::dot(x, y), kernels::serial::dot(x, y));
  EXPECT_EQ(kernels::sum_squares(x), kernels::serial::sum_squares(x));
  EXPECT_EQ(kernels::l1_norm(x), kernels::serial::l1_norm(x));
}

TEST(Reductions, LongInputsCloseToSerial) {
  Rng rng(12);
  const std::vector<double> x = rng_normal(rng, 200000);
  EXPECT_NEAR(kernels::sum_squares(x), kernels::serial::sum_squares(x), 1e-9 * kernels::serial::sum_squares(x));
}

TEST(Reductions, IndependentOfThreadCount) {
  Rng rng(13);
  const std::vector<double> x = rng_normal(rng, 300000);
  const Matrix a = random_matrix(96, 96, 14);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = kernels::sum_squares(x);
  const Matrix p1 = kernels::matmul(a, a);
  omp_set_num_threads(4);
  const double four = kernels::sum_squares(x);
  const Matrix p4 = kernels::matmul(a, a);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, four);
  EXPECT_EQ(p1, p4);
}

TEST(FrobeniusNorm, TrivialCases) {
  EXPECT_EQ(frobenius_norm(Matrix(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(Matrix::identity(2)), std::sqrt(2.0));
  EXPECT_EQ(frobenius_norm(Matrix{{3}, {4}}), 5.0);
}

TEST(AllFinite, DetectsNanAndInf) {
  std::vector<double> x{1.0, 2.0, 3.0};
  EXPECT_TRUE(kernels::all_finite(x));
  x[1] = std::nan("");
  EXPECT_FALSE(kernels::all_finite(x));
  x[1] = INFINITY;
  EXPECT_FALSE(kernels::all_finite(x));
}

TEST(Qr, IdentityAndPositiveDiagonal) {
  EXPECT_EQ(qr_orthonormal(Matrix::identity(3)), Matrix::identity(3));
  const Matrix q = qr_orthonormal(Matrix{{2, 0}, {0, 3}});
  EXPECT_LE(max_abs_diff(q, Matrix::identity(2)), 0.0);
}

TEST(Qr, RandomReconstruction) {
  const Matrix a = random_matrix(4, 4, 21);
  const Matrix q = qr_orthonormal(a);
  EXPECT_LE(max_abs_diff(matmul(q.transposed(), q), Matrix::identity(4)), 1e-12);
  // R = Qᵀ A must be upper triangular with a non-negative diagonal, and Q R = A.
  const Matrix r = matmul(q.transposed(), a);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GE(r(i, i), 0.0);
    for (std::size_t j = 0; j < i; ++j) EXPECT_NEAR(r(i, j), 0.0, 1e-12);
  }
  EXPECT_LE(max_abs_diff(matmul(q, r), a), 1e-10);
}

TEST(Qr, RankDeficientInputs) {
  const Matrix a{{1, 2}, {2, 4}};
  EXPECT_THROW(qr_orthonormal(a), DegenerateInput);
  const Matrix q = qr_orthogonal_factor(a);
  EXPECT_LE(max_abs_diff(matmul(q.transposed(), q), Matrix::identity(2)), 1e-12);
}

TEST(SymEigen, TrivialCases) {
  EXPECT_EQ(sym_eigenbasis(Matrix::identity(2)), Matrix::identity(2));
  const Matrix v = sym_eigenbasis(Matrix{{1, 0}, {0, 9}});
  EXPECT_EQ(v, (Matrix{{0, 1}, {1, 0}}));
}

TEST(SymEigen, RandomResidual) {
  const Matrix b = random_matrix(5, 5, 31);
  const Matrix a = matmul(b, b.transposed());
  const SymmetricEigen e = sym_eigen(a);
  Matrix vl = e.vectors;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 5; ++k) vl(i, k) *= e.values[k];
  EXPECT_LE(max_abs_diff(matmul(a, e.vectors), vl), 1e-9);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_GE(e.values[k - 1], e.values[k]);
}

TEST(Svd, TrivialCases) {
  EXPECT_EQ(svd_singular_values(Matrix::identity(3)), (std::vector<double>{1, 1, 1}));
  const auto s = svd_singular_values(Matrix{{2, 0}, {0, 0.5}});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0], 2.0);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
}

TEST(Svd, SquaresAreEigenvaluesOfGram) {
  const Matrix a = random_matrix(3, 3, 41);
  const auto s = svd_singular_values(a);
  const auto ev = sym_eigen(matmul(a.transposed(), a)).values;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s[i] * s[i], ev[i], 1e-9);
}

TEST(SolveSpd, SolvesAndRejects) {
  const Matrix a{{4, 1}, {1, 3}};
  const auto x = solve_spd(a, {1, 2});
  EXPECT_NEAR(4 * x[0] + x[1], 1.0, 1e-14);
  EXPECT_NEAR(x[0] + 3 * x[1], 2.0, 1e-14);
  EXPECT_THROW(solve_spd(Matrix{{1, 2}, {2, 1}}, {1, 1}), DegenerateInput);
}

TEST(Rng, EmptyAndDeterministic) {
  Rng a(5, 2);
  EXPECT_TRUE(rng_normal(a, 0).empty());
  Rng b(5, 2), c(5, 2);
  EXPECT_EQ(rng_normal(b, 100), rng_normal(c, 100));
  Rng d(5, 3);
  Rng e(5, 2);
  EXPECT_NE(rng_normal(d, 10), rng_normal(e, 10));
}

TEST(Rng, NormalMoments) {
  Rng rng(123);
  const auto x = rng_normal(rng, 100000);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= x.size();
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= (x.size() - 1);
  EXPECT_GE(mean, -0.02);
  EXPECT_LE(mean, 0.02);
  EXPECT_GE(var, 0.97);
  EXPECT_LE(var, 1.03);
}

TEST(Rng, UniformAndBelowRanges) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.below(7), 7u);
  }
}

TEST(Rng, HashCombineIsOrderSensitive) {
  EXPECT_NE(hash_combine(1, 2), hash_combine(2, 1));
  EXPECT_EQ(hash_combine(1, 2), hash_combine(1, 2));
}
