#include "optlab/optimizers/prodigy.hpp"

#include <algorithm>
#include <cmath>

#include "optlab/error.hpp"

namespace optlab {

ProdigyReport prodigy_step(std::span<ParamBlock> blocks, std::span<const std::vector<double>> grads,
                           ProdigyState& state, const CommonHyper& hyper, const ProdigyHyper& prodigy) {
  if (blocks.size() != grads.size()) throw ContractViolation("prodigy: one gradient per block required");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    detail::require_same_size(blocks[b].size(), grads[b].size(), "prodigy");
    detail::require_finite(grads[b], "prodigy", "gradient");
  }
  if (state.t == 0 && state.blocks.empty()) {
    state.d = prodigy.d0;
    state.blocks.resize(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) state.blocks[b].x0 = blocks[b].values;
  }
  if (state.blocks.size() != blocks.size()) throw ContractViolation("prodigy: block count changed");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double b1 = prodigy.betas.beta1, b2 = prodigy.betas.beta2;
  const double sqrt_b2 = std::sqrt(b2);
  const double d = state.d;
  const double gamma_t = prodigy.bias_correction
                             ? hyper.gamma * std::sqrt(1.0 - std::pow(b2, t)) / (1.0 - std::pow(b1, t))
                             : hyper.gamma;
  const double lambda = hyper.lambda, eps = hyper.epsilon;
  const double weight = (1.0 - sqrt_b2) * gamma_t * d * d;

  double inner = 0.0;
  double s_l1 = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& st = state.blocks[b];
    const std::size_t n = blocks[b].size();
    detail::ensure_buffer(st.m, n, "prodigy");
    detail::ensure_buffer(st.v, n, "prodigy");
    detail::ensure_buffer(st.s, n, "prodigy");
    const auto& g = grads[b];
    const auto& x = blocks[b].values;
    for (std::size_t i = 0; i < n; ++i) {
      st.m[i] = b1 * st.m[i] + (1.0 - b1) * d * g[i];
      st.v[i] = b2 * st.v[i] + (1.0 - b2) * d * d * g[i] * g[i];
      inner += g[i] * (st.x0[i] - x[i]);
      st.s[i] = sqrt_b2 * st.s[i] + weight * g[i];
      s_l1 += std::abs(st.s[i]);
    }
  }
  state.r = sqrt_b2 * state.r + weight * inner;
  const double d_next = s_l1 > 0.0 ? std::max(d, state.r / s_l1) : d;

  ProdigyReport report;
  report.updates.resize(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& st = state.blocks[b];
    auto& x = blocks[b].values;
    Update& update = report.updates[b];
    update.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double delta = -gamma_t * d * (st.m[i] / (std::sqrt(st.v[i]) + d * eps) + lambda * x[i]);
      x[i] += delta;
      update[i] = delta;
    }
    detail::require_finite(st.m, "prodigy", "first moment");
    detail::require_finite(st.v, "prodigy", "second moment");
    detail::require_finite(st.s, "prodigy", "s accumulator");
  }
  if (!std::isfinite(state.r) || !std::isfinite(d_next)) throw PoisonedState("prodigy: non-finite d estimate");
  state.d = d_next;
  report.d_used = d;
  report.d_next = d_next;
  report.effective_lr = gamma_t * d;
  return report;
}

}  // namespace optlab
