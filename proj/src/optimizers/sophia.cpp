#include "optlab/optimizers/sophia.hpp"

#include <algorithm>
#include <cmath>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

bool sophia_refreshes_next(const SophiaState& state, const SophiaHyper& sophia) {
  if (sophia.estimator_freq <= 0) return false;
  return (state.t + 1) % sophia.estimator_freq == 1 % sophia.estimator_freq;
}

Update sophia_step(ParamBlock& block, std::span<const double> grad, SophiaState& state,
                   const CommonHyper& hyper, const SophiaHyper& sophia,
                   std::span<const double> resampled_grad, std::size_t batch_size) {
  const std::size_t n = block.size();
  detail::require_same_size(n, grad.size(), "sophia");
  detail::require_finite(grad, "sophia", "gradient");
  const bool refresh = sophia_refreshes_next(state, sophia);
  if (refresh) {
    if (resampled_grad.empty()) throw ContractViolation("sophia: refresh step without a resampled gradient");
    if (batch_size == 0) throw ContractViolation("sophia: batch size must be >= 1");
    detail::require_same_size(n, resampled_grad.size(), "sophia");
    detail::require_finite(resampled_grad, "sophia", "resampled gradient");
  }
  detail::ensure_buffer(state.m, n, "sophia");
  detail::ensure_buffer(state.h, n, "sophia");

  state.t += 1;
  const double b1 = sophia.betas.beta1, b2 = sophia.betas.beta2;
  const double rho = sophia.rho, bsz = static_cast<double>(batch_size);
  const double gamma = hyper.gamma, lambda = hyper.lambda, eps = hyper.epsilon;

  Update update(n);
  double* x = block.values.data();
  double* m = state.m.data();
  double* h = state.h.data();
  kernels::parallel_for(n, [&](std::size_t i) {
    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
    if (refresh) {
      const double gh = resampled_grad[i];
      h[i] = b2 * h[i] + (1.0 - b2) * (bsz * gh * gh);
    }
    const double ratio = std::min(std::abs(m[i]) / (rho * h[i] + eps), 1.0);
    const double delta = -gamma * (sign_of(m[i]) * ratio + lambda * x[i]);
    x[i] += delta;
    update[i] = delta;
  });
  detail::require_finite(state.m, "sophia", "first moment");
  detail::require_finite(state.h, "sophia", "curvature");
  return update;
}

}  // namespace optlab
