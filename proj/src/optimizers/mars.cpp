#include "optlab/optimizers/mars.hpp"

#include <cmath>
#include <string>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

std::string_view to_string(MarsVariant v) {
  switch (v) {
    case MarsVariant::adamw: return "adamw";
    case MarsVariant::lion: return "lion";
    case MarsVariant::shampoo: return "shampoo";
  }
  return "?";
}

MarsVariant parse_mars_variant(std::string_view name) {
  if (name == "adamw") return MarsVariant::adamw;
  if (name == "lion") return MarsVariant::lion;
  if (name == "shampoo") return MarsVariant::shampoo;
  throw ConfigError("unknown MARS variant '" + std::string(name) + "' (valid: adamw, lion, shampoo)");
}

Update mars_step(ParamBlock& block, std::span<const double> grad, MarsState& state,
                 const MarsHyper& hyper) {
  if (!block.is_matrix()) return adamw_step(block, grad, state.adam_1d, hyper.adam, hyper.adam_betas);

  const std::size_t n = block.size();
  detail::require_same_size(n, grad.size(), "mars");
  detail::require_finite(grad, "mars", "gradient");
  detail::ensure_buffer(state.g_prev, n, "mars");
  detail::ensure_buffer(state.m, n, "mars");
  if (hyper.variant == MarsVariant::adamw) detail::ensure_buffer(state.v, n, "mars");

  state.t += 1;
  const double b1 = hyper.matrix_betas.beta1, b2 = hyper.matrix_betas.beta2;
  const double scale = hyper.eta * b1 / (1.0 - b1);

  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = grad[i] + scale * (grad[i] - state.g_prev[i]);
  if (hyper.variant != MarsVariant::shampoo) {
    const double norm = kernels::l2_norm(c);
    if (norm > 1.0) {
      for (double& ci : c) ci /= norm;
    }
  }
  for (std::size_t i = 0; i < n; ++i) state.m[i] = b1 * state.m[i] + (1.0 - b1) * c[i];

  const double gamma = hyper.matrix.gamma, lambda = hyper.matrix.lambda, eps = hyper.matrix.epsilon;
  std::vector<double> direction(n);
  switch (hyper.variant) {
    case MarsVariant::adamw: {
      const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
      const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
      for (std::size_t i = 0; i < n; ++i) {
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * c[i] * c[i];
        direction[i] = (state.m[i] / bc1) / (std::sqrt(state.v[i] / bc2) + eps);
      }
      break;
    }
    case MarsVariant::lion:
      for (std::size_t i = 0; i < n; ++i) direction[i] = sign_of(state.m[i]);
      break;
    case MarsVariant::shampoo: {
      const Matrix mm = Matrix::from_span(block.rows(), block.cols(), state.m);
      if (frobenius_norm(mm) > 0.0) {
        const Matrix w = newton_schulz_orthogonalize(mm, hyper.ns_iters, hyper.ns_coeffs);
        direction = w.data();
      }
      break;
    }
  }

  Update update(n);
  double* x = block.values.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = -gamma * (direction[i] + lambda * x[i]);
    x[i] += delta;
    update[i] = delta;
  }
  state.g_prev.assign(grad.begin(), grad.end());
  detail::require_finite(state.m, "mars", "first moment");
  if (hyper.variant == MarsVariant::adamw) detail::require_finite(state.v, "mars", "second moment");
  return update;
}

}  // namespace optlab
