#include "optlab/numerics/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const Matrix& a) {
  return {a.data().data(), static_cast<Eigen::Index>(a.rows()),
          static_cast<Eigen::Index>(a.cols())};
}

Matrix to_matrix(const RowMajor& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  Eigen::Map<RowMajor>(out.data().data(), m.rows(), m.cols()) = m;
  return out;
}

struct Householder {
  RowMajor q;  // rows x cols (thin) or rows x rows (full)
  Eigen::VectorXd r_diag;
};

Householder householder(const Matrix& a, bool thin) {
  const auto m = static_cast<Eigen::Index>(a.rows());
  const auto n = static_cast<Eigen::Index>(a.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(view(a)));
  const Eigen::Index qcols = thin ? n : m;
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, qcols);
  Eigen::VectorXd diag = qr.matrixQR().diagonal();
  // Flip columns so that R has a nonnegative diagonal.
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (diag(i) < 0.0) {
      q.col(i) = -q.col(i);
      diag(i) = -diag(i);
    }
  }
  return {q, diag};
}

}  // namespace

Matrix qr_orthonormal(const Matrix& a) {
  if (a.rows() < a.cols()) throw ContractViolation("qr_orthonormal: rows < cols");
  if (a.cols() == 0) return Matrix(a.rows(), 0);
  const Householder h = householder(a, /*thin=*/true);
  const double scale = std::max(kernels::frobenius_norm(a), 1e-300);
  for (Eigen::Index i = 0; i < h.r_diag.size(); ++i) {
    if (!(h.r_diag(i) > 1e-12 * scale)) {
      throw DegenerateInput("qr_orthonormal: input is rank deficient");
    }
  }
  return to_matrix(h.q);
}

Matrix qr_orthogonal_factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractViolation("qr_orthogonal_factor: matrix must be square");
  if (!kernels::all_finite(a.values())) throw NumericalFailure("qr_orthogonal_factor: non-finite input");
  return to_matrix(householder(a, /*thin=*/false).q);
}

SymmetricEigen sym_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractViolation("sym_eigen: matrix must be square");
  const std::size_t n = a.rows();
  if (!kernels::all_finite(a.values())) throw NumericalFailure("sym_eigen: non-finite input");
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = a(i, j) - a(j, i);
      asym += 2.0 * d * d;
    }
  if (std::sqrt(asym) > 1e-10 * kernels::frobenius_norm(a)) {
    throw ContractViolation("sym_eigen: matrix is not symmetric");
  }

  const Eigen::MatrixXd sym = 0.5 * (Eigen::MatrixXd(view(a)) + Eigen::MatrixXd(view(a)).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalFailure("sym_eigen: eigensolver did not converge");

  // Eigen returns ascending values; reorder descending, ties kept in solver order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& lam = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return lam(static_cast<Eigen::Index>(x)) > lam(static_cast<Eigen::Index>(y));
  });

  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const auto src = static_cast<Eigen::Index>(order[k]);
    out.values[k] = lam(src);
    Eigen::VectorXd col = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < col.size(); ++i)
      if (std::abs(col(i)) > std::abs(col(arg))) arg = i;
    if (col(arg) < 0.0) col = -col;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = col(static_cast<Eigen::Index>(i));
  }
  return out;
}

Matrix sym_eigenbasis(const Matrix& a) { return sym_eigen(a).vectors; }

std::vector<double> svd_singular_values(const Matrix& a) {
  if (a.empty()) return {};
  // The smaller Gram matrix carries the same nonzero spectrum.
  const SymmetricEigen e =
      sym_eigen(a.rows() < a.cols() ? kernels::matmul_nt(a, a) : kernels::matmul_tn(a, a));
  std::vector<double> s(e.values.size());
  std::transform(e.values.begin(), e.values.end(), s.begin(),
                 [](double v) { return std::sqrt(std::max(v, 0.0)); });
  return s;
}

}  // namespace optlab

namespace optlab {

std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) throw ContractViolation("solve_spd: shape mismatch");
  const Eigen::MatrixXd dense = view(a);
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success) throw DegenerateInput("solve_spd: matrix is not positive definite");
  const Eigen::VectorXd x = llt.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  return {x.data(), x.data() + x.size()};
}

}  // namespace optlab
