#include "optlab/optimizers/schedule_free.hpp"

#include <algorithm>
#include <cmath>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

std::span<const double> sfadamw_gradient_point(const ParamBlock& block, ScheduleFreeState& state,
                                               const ScheduleFreeHyper& sf) {
  const std::size_t n = block.size();
  if (state.z.empty()) {
    state.z = block.values;
    state.x_avg = block.values;
  } else if (state.z.size() != n) {
    throw ContractViolation("sf-adamw: state does not match block shape");
  }
  const double b1 = sf.betas.beta1;
  state.y.resize(n);
  const double* z = state.z.data();
  const double* x = state.x_avg.data();
  double* y = state.y.data();
  kernels::parallel_for(n, [&](std::size_t i) { y[i] = (1.0 - b1) * z[i] + b1 * x[i]; });
  state.y_ready = true;
  return state.y;
}

Update sfadamw_step(ParamBlock& block, std::span<const double> grad, ScheduleFreeState& state,
                    const CommonHyper& hyper, const ScheduleFreeHyper& sf) {
  if (!state.y_ready) throw ContractViolation("sf-adamw: gradient must be taken at y; call sfadamw_gradient_point first");
  const std::size_t n = block.size();
  detail::require_same_size(n, grad.size(), "sf-adamw");
  detail::require_finite(grad, "sf-adamw", "gradient");
  detail::ensure_buffer(state.v, n, "sf-adamw");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double b2 = sf.betas.beta2;
  const double warm = sf.warmup_steps > 0 ? std::min(1.0, t / static_cast<double>(sf.warmup_steps)) : 1.0;
  const double gamma_t = hyper.gamma * std::sqrt(1.0 - std::pow(b2, t)) * warm;
  state.lr_sq_sum += gamma_t * gamma_t;
  const double c = state.lr_sq_sum > 0.0 ? gamma_t * gamma_t / state.lr_sq_sum : 0.0;
  const double lambda = hyper.lambda, eps = hyper.epsilon;

  Update update(n);
  double* x_block = block.values.data();
  double* z = state.z.data();
  double* xa = state.x_avg.data();
  double* v = state.v.data();
  const double* y = state.y.data();
  kernels::parallel_for(n, [&](std::size_t i) {
    const double g = grad[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    z[i] = z[i] - gamma_t * (g / (std::sqrt(v[i]) + eps) + lambda * y[i]);
    const double next = (1.0 - c) * xa[i] + c * z[i];
    update[i] = next - x_block[i];
    xa[i] = next;
    x_block[i] = next;
  });
  state.y_ready = false;
  detail::require_finite(state.v, "sf-adamw", "second moment");
  detail::require_finite(state.z, "sf-adamw", "z iterate");
  return update;
}

}  // namespace optlab
