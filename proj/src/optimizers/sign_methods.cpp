#include "optlab/optimizers/sign_methods.hpp"

#include <string>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

Update lion_step(ParamBlock& block, std::span<const double> grad, SignState& state,
                 const CommonHyper& hyper, const AdamBetas& betas) {
  const std::size_t n = block.size();
  detail::require_same_size(n, grad.size(), "lion");
  detail::require_finite(grad, "lion", "gradient");
  detail::ensure_buffer(state.m, n, "lion");

  state.t += 1;
  const double b1 = betas.beta1, b2 = betas.beta2;
  const double gamma = hyper.gamma, lambda = hyper.lambda;

  Update update(n);
  double* x = block.values.data();
  double* m = state.m.data();
  kernels::parallel_for(n, [&](std::size_t i) {
    const double g = grad[i];
    const double delta = -gamma * (sign_of(b1 * m[i] + (1.0 - b1) * g) + lambda * x[i]);
    x[i] += delta;
    update[i] = delta;
    m[i] = b2 * m[i] + (1.0 - b2) * g;
  });
  detail::require_finite(state.m, "lion", "momentum");
  return update;
}

std::string_view to_string(SignumVariant v) {
  switch (v) {
    case SignumVariant::nesterov: return "nesterov";
    case SignumVariant::basic: return "basic";
    case SignumVariant::dampened: return "dampened";
  }
  return "?";
}

SignumVariant parse_signum_variant(std::string_view name) {
  if (name == "nesterov") return SignumVariant::nesterov;
  if (name == "basic") return SignumVariant::basic;
  if (name == "dampened") return SignumVariant::dampened;
  throw ConfigError("unknown signum variant '" + std::string(name) +
                    "' (valid: nesterov, basic, dampened)");
}

Update signum_step(ParamBlock& block, std::span<const double> grad, SignState& state,
                   const CommonHyper& hyper, const SignumHyper& signum) {
  const std::size_t n = block.size();
  detail::require_same_size(n, grad.size(), "signum");
  detail::require_finite(grad, "signum", "gradient");
  detail::ensure_buffer(state.m, n, "signum");

  state.t += 1;
  const double beta = signum.momentum;
  const double gamma = hyper.gamma, lambda = hyper.lambda;
  const bool coupled = signum.coupled_weight_decay;
  const double decoupled = coupled ? 0.0 : lambda;
  const double grad_weight = signum.variant == SignumVariant::basic      ? 1.0 - beta
                             : signum.variant == SignumVariant::dampened ? 1.0 - signum.dampening
                                                                         : 1.0;
  const bool nesterov = signum.variant == SignumVariant::nesterov;

  Update update(n);
  double* x = block.values.data();
  double* m = state.m.data();
  kernels::parallel_for(n, [&](std::size_t i) {
    const double g = coupled ? grad[i] + lambda * x[i] : grad[i];
    m[i] = beta * m[i] + grad_weight * g;
    const double direction = nesterov ? beta * m[i] + g : m[i];
    const double delta = -gamma * (sign_of(direction) + decoupled * x[i]);
    x[i] += delta;
    update[i] = delta;
  });
  detail::require_finite(state.m, "signum", "momentum");
  return update;
}

}  // namespace optlab
