#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "optlab/optimizers/common.hpp"

namespace optlab {

/// Schedule-free AdamW. The block holds the averaged iterate x; z is the fast
/// sequence and y the interpolation where gradients are taken.
struct ScheduleFreeState {
  std::vector<double> z;
  std::vector<double> x_avg;
  std::vector<double> v;
  std::vector<double> y;
  double lr_sq_sum = 0.0;
  std::int64_t t = 0;
  bool y_ready = false;
};

struct ScheduleFreeHyper {
  AdamBetas betas{0.9, 0.999};
  std::int64_t warmup_steps = 0;  // internal warmup; 0 disables it
};

/// Computes y = (1 - beta1) z + beta1 x and marks it as the gradient point.
/// The caller must evaluate the next gradient at the returned values.
std::span<const double> sfadamw_gradient_point(const ParamBlock& block, ScheduleFreeState& state,
                                               const ScheduleFreeHyper& sf);

/// One SF-AdamW step with `grad` taken at y. Throws ContractViolation if
/// sfadamw_gradient_point was not called since the previous step.
Update sfadamw_step(ParamBlock& block, std::span<const double> grad, ScheduleFreeState& state,
                    const CommonHyper& hyper, const ScheduleFreeHyper& sf);

}  // namespace optlab
