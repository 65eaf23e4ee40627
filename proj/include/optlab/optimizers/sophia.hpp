#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "optlab/optimizers/common.hpp"

namespace optlab {

struct SophiaState {
  std::vector<double> m;
  std::vector<double> h;  // EMA of the Gauss-Newton-Bartlett diagonal
  std::int64_t t = 0;
};

struct SophiaHyper {
  AdamBetas betas{0.9, 0.999};
  double rho = 0.04;
  std::int64_t estimator_freq = 10;
};

/// True when the next step refreshes h (t % phi == 1) and needs a resampled gradient.
bool sophia_refreshes_next(const SophiaState& state, const SophiaHyper& sophia);

/// Sophia with the corrected update
///   x <- x - gamma (sign(m) min(|m| / (rho h + eps), 1) + lambda x).
/// `resampled_grad` is the gradient against labels drawn from the model's own
/// softmax on the current batch of `batch_size` samples; it is required on
/// refresh steps and ignored otherwise.
Update sophia_step(ParamBlock& block, std::span<const double> grad, SophiaState& state,
                   const CommonHyper& hyper, const SophiaHyper& sophia,
                   std::span<const double> resampled_grad, std::size_t batch_size);

}  // namespace optlab
