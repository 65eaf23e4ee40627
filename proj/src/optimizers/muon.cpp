#include "optlab/optimizers/muon.hpp"

#include <algorithm>
#include <cmath>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

namespace detail {

Matrix nesterov_direction(const ParamBlock& block, std::span<const double> grad,
                          std::vector<double>& m, double beta, std::string_view who) {
  const std::size_t n = block.size();
  ensure_buffer(m, n, who);
  Matrix dir(block.rows(), block.cols());
  auto d = dir.values();
  kernels::parallel_for(n, [&](std::size_t i) {
    m[i] = beta * m[i] + grad[i];
    d[i] = beta * m[i] + grad[i];
  });
  require_finite(m, who, "momentum");
  return dir;
}

}  // namespace detail

namespace {

/// NS of the Nesterov direction; a zero direction maps to zero.
Matrix orthogonalized(const Matrix& dir, const MuonState& state) {
  if (frobenius_norm(dir) == 0.0) return Matrix(dir.rows(), dir.cols());
  return newton_schulz_orthogonalize(dir, state.ns_iters, state.ns_coeffs);
}

}  // namespace

Update muon_step(ParamBlock& block, std::span<const double> grad, MuonState& state,
                 const MuonHyper& hyper) {
  if (!block.is_matrix()) return adamw_step(block, grad, state.adam, hyper.adam, hyper.adam_betas);

  detail::require_same_size(block.size(), grad.size(), "muon");
  detail::require_finite(grad, "muon", "gradient");
  const Matrix dir = detail::nesterov_direction(block, grad, state.m, hyper.momentum, "muon");
  const Matrix w = orthogonalized(dir, state);

  const double gamma = hyper.matrix_gamma;
  Update update(block.size());
  auto ws = w.values();
  double* x = block.values.data();
  kernels::parallel_for(update.size(), [&](std::size_t i) {
    const double delta = -gamma * ws[i];
    x[i] += delta;
    update[i] = delta;
  });
  return update;
}

Update dmuon_step(ParamBlock& block, std::span<const double> grad, MuonState& state,
                  const CommonHyper& hyper, const DmuonHyper& dmuon) {
  if (!block.is_matrix()) return adamw_step(block, grad, state.adam, hyper, dmuon.adam_betas);

  detail::require_same_size(block.size(), grad.size(), "d-muon");
  detail::require_finite(grad, "d-muon", "gradient");
  const Matrix dir = detail::nesterov_direction(block, grad, state.m, dmuon.momentum, "d-muon");
  const Matrix w = orthogonalized(dir, state);

  const double scale =
      dmuon.rms_scale * std::sqrt(static_cast<double>(std::max(block.rows(), block.cols())));
  const double gamma = hyper.gamma, lambda = hyper.lambda;
  Update update(block.size());
  auto ws = w.values();
  double* x = block.values.data();
  kernels::parallel_for(update.size(), [&](std::size_t i) {
    const double delta = -gamma * (scale * ws[i] + lambda * x[i]);
    x[i] += delta;
    update[i] = delta;
  });
  return update;
}

}  // namespace optlab
