#include "optlab/optimizers/soap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"
#include "optlab/numerics/linalg.hpp"

namespace optlab {

namespace {

void initialize_bases(SoapState& state, const Matrix& g, const SoapHyper& soap) {
  const std::size_t r = g.rows(), c = g.cols();
  if (soap.identity_init) {
    state.q_l = Matrix::identity(r);
    state.q_r = Matrix::identity(c);
  } else {
    state.q_l = sym_eigenbasis(kernels::matmul_nt(g, g));
    state.q_r = sym_eigenbasis(kernels::matmul_tn(g, g));
  }
  if (soap.precond_freq > 0) {
    state.l_stat = Matrix(r, r);
    state.r_stat = Matrix(c, c);
  }
  state.m.assign(g.size(), 0.0);
  state.v.assign(g.size(), 0.0);
  state.initialized = true;
}

void ema_into(Matrix& stat, const Matrix& sample, double beta) {
  auto s = stat.values();
  auto x = sample.values();
  kernels::parallel_for(s.size(), [&](std::size_t i) { s[i] = beta * s[i] + (1.0 - beta) * x[i]; });
}

Matrix rotate_in(const SoapState& state, const Matrix& a) {
  return kernels::matmul(kernels::matmul_tn(state.q_l, a), state.q_r);
}

}  // namespace

Update soap_step(ParamBlock& block, std::span<const double> grad, SoapState& state,
                 const CommonHyper& hyper, const SoapHyper& soap) {
  const bool oversized = std::max(block.rows(), block.cols()) > soap.max_precond_dim;
  if (!block.is_matrix() || oversized) {
    return adamw_step(block, grad, state.adam, hyper, soap.betas);
  }
  detail::require_same_size(block.size(), grad.size(), "soap");
  detail::require_finite(grad, "soap", "gradient");

  const std::int64_t t = state.t + 1;
  const Matrix g = as_matrix(grad, block.rows(), block.cols());
  try {
    if (!state.initialized) initialize_bases(state, g, soap);
  } catch (const std::exception& e) {
    throw NumericalFailure(std::string("soap: basis initialisation failed: ") + e.what(), t);
  }
  if (state.m.size() != block.size()) throw ContractViolation("soap: state does not match block shape");
  state.t = t;

  const double b1 = soap.betas.beta1, b2 = soap.betas.beta2;
  const double bc1 = soap.bias_correction ? 1.0 - std::pow(b1, static_cast<double>(t)) : 1.0;
  const double bc2 = soap.bias_correction ? 1.0 - std::pow(b2, static_cast<double>(t)) : 1.0;
  const double gamma = hyper.gamma, lambda = hyper.lambda, eps = hyper.epsilon;

  const Matrix g_rot = rotate_in(state, g);
  double* m = state.m.data();
  kernels::parallel_for(state.m.size(), [&](std::size_t i) { m[i] = b1 * m[i] + (1.0 - b1) * grad[i]; });
  const Matrix m_rot = rotate_in(state, Matrix::from_span(block.rows(), block.cols(), state.m));

  Matrix n_rot(block.rows(), block.cols());
  {
    double* v = state.v.data();
    auto gr = g_rot.values();
    auto mr = m_rot.values();
    auto out = n_rot.values();
    kernels::parallel_for(out.size(), [&](std::size_t i) {
      v[i] = b2 * v[i] + (1.0 - b2) * gr[i] * gr[i];
      out[i] = (mr[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    });
  }
  const Matrix direction = kernels::matmul_nt(kernels::matmul(state.q_l, n_rot), state.q_r);

  Update update(block.size());
  auto d = direction.values();
  double* x = block.values.data();
  kernels::parallel_for(update.size(), [&](std::size_t i) {
    const double delta = -gamma * (d[i] + lambda * x[i]);
    x[i] += delta;
    update[i] = delta;
  });
  detail::require_finite(state.m, "soap", "first moment");
  detail::require_finite(state.v, "soap", "second moment");

  if (soap.precond_freq > 0) {
    ema_into(state.l_stat, kernels::matmul_nt(g, g), b2);
    ema_into(state.r_stat, kernels::matmul_tn(g, g), b2);
    if (t % soap.precond_freq == 1 % soap.precond_freq) {
      try {
        state.q_l = qr_orthogonal_factor(kernels::matmul(state.l_stat, state.q_l));
        state.q_r = qr_orthogonal_factor(kernels::matmul(state.r_stat, state.q_r));
      } catch (const std::exception& e) {
        throw NumericalFailure(std::string("soap: basis refresh failed: ") + e.what(), t);
      }
    }
  }
  return update;
}

}  // namespace optlab
