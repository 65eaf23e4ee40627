#include "optlab/optimizers/adam_family.hpp"

#include <algorithm>
#include <cmath>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

Update adamw_step(ParamBlock& block, std::span<const double> grad, AdamLikeState& state,
                  const CommonHyper& hyper, const AdamBetas& betas) {
  const std::size_t n = block.size();
  detail::require_same_size(n, grad.size(), "adamw");
  detail::require_finite(grad, "adamw", "gradient");
  detail::ensure_buffer(state.m, n, "adamw");
  detail::ensure_buffer(state.v, n, "adamw");

  state.t += 1;
  const double b1 = betas.beta1, b2 = betas.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const double gamma = hyper.gamma, lambda = hyper.lambda, eps = hyper.epsilon;

  Update update(n);
  double* x = block.values.data();
  double* m = state.m.data();
  double* v = state.v.data();
  kernels::parallel_for(n, [&](std::size_t i) {
    const double g = grad[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    const double delta = -gamma * (m_hat / (std::sqrt(v_hat) + eps) + lambda * x[i]);
    x[i] += delta;
    update[i] = delta;
  });
  detail::require_finite(state.m, "adamw", "first moment");
  detail::require_finite(state.v, "adamw", "second moment");
  return update;
}

void adopt_initialize(AdoptState& state, std::span<const double> grad0) {
  detail::require_finite(grad0, "adopt", "initial gradient");
  state.m.assign(grad0.size(), 0.0);
  state.v.resize(grad0.size());
  std::transform(grad0.begin(), grad0.end(), state.v.begin(), [](double g) { return g * g; });
  state.t = 0;
  state.initialized = true;
}

Update adopt_step(ParamBlock& block, std::span<const double> grad, AdoptState& state,
                  const CommonHyper& hyper, const AdamBetas& betas) {
  if (!state.initialized) throw ContractViolation("adopt: step before v0 initialisation");
  const std::size_t n = block.size();
  detail::require_same_size(n, grad.size(), "adopt");
  detail::require_same_size(n, state.v.size(), "adopt");
  detail::require_finite(grad, "adopt", "gradient");

  state.t += 1;
  const double clip = std::pow(static_cast<double>(state.t), 0.25);
  const double b1 = betas.beta1, b2 = betas.beta2;
  const double gamma = hyper.gamma, lambda = hyper.lambda, eps = hyper.epsilon;

  Update update(n);
  double* x = block.values.data();
  double* m = state.m.data();
  double* v = state.v.data();
  kernels::parallel_for(n, [&](std::size_t i) {
    const double g = grad[i];
    const double scaled = std::clamp(g / std::max(std::sqrt(v[i]), eps), -clip, clip);
    m[i] = b1 * m[i] + (1.0 - b1) * scaled;
    const double delta = -gamma * (m[i] + lambda * x[i]);
    x[i] += delta;
    update[i] = delta;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
  });
  detail::require_finite(state.m, "adopt", "first moment");
  detail::require_finite(state.v, "adopt", "second moment");
  return update;
}

Update ademamix_step(ParamBlock& block, std::span<const double> grad, AdemamixState& state,
                     const CommonHyper& hyper, const AdamBetas& betas,
                     const EmaScheduleSpec& schedule) {
  const std::size_t n = block.size();
  detail::require_same_size(n, grad.size(), "ademamix");
  detail::require_finite(grad, "ademamix", "gradient");
  detail::ensure_buffer(state.m, n, "ademamix");
  detail::ensure_buffer(state.m_slow, n, "ademamix");
  detail::ensure_buffer(state.v, n, "ademamix");

  state.t += 1;
  const double b3 = ademamix_beta3_at(schedule, state.t);
  const double alpha = ademamix_alpha_at(schedule, state.t);
  const double b1 = betas.beta1, b2 = betas.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const double gamma = hyper.gamma, lambda = hyper.lambda, eps = hyper.epsilon;

  Update update(n);
  double* x = block.values.data();
  double* m = state.m.data();
  double* ms = state.m_slow.data();
  double* v = state.v.data();
  kernels::parallel_for(n, [&](std::size_t i) {
    const double g = grad[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    ms[i] = b3 * ms[i] + (1.0 - b3) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    const double delta = -gamma * ((m_hat + alpha * ms[i]) / (std::sqrt(v_hat) + eps) + lambda * x[i]);
    x[i] += delta;
    update[i] = delta;
  });
  detail::require_finite(state.m, "ademamix", "first moment");
  detail::require_finite(state.m_slow, "ademamix", "slow moment");
  detail::require_finite(state.v, "ademamix", "second moment");
  return update;
}

}  // namespace optlab
