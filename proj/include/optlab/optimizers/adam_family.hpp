#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "optlab/optimizers/common.hpp"
#include "optlab/schedules.hpp"

namespace optlab {

struct AdamLikeState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
};

/// AdamW with bias correction and decoupled weight decay:
///   x <- x - gamma * (m_hat / (sqrt(v_hat) + eps) + lambda * x)
Update adamw_step(ParamBlock& block, std::span<const double> grad, AdamLikeState& state,
                  const CommonHyper& hyper, const AdamBetas& betas);

struct AdoptState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  bool initialized = false;
};

/// Seeds v0 = g0 * g0 from the first observed gradient. Parameters do not move.
void adopt_initialize(AdoptState& state, std::span<const double> grad0);

/// ADOPT: normalise by the previous second moment, clamp to t^(1/4), then
/// update v. Throws ContractViolation if adopt_initialize was never called.
Update adopt_step(ParamBlock& block, std::span<const double> grad, AdoptState& state,
                  const CommonHyper& hyper, const AdamBetas& betas);

struct AdemamixState {
  std::vector<double> m;
  std::vector<double> m_slow;
  std::vector<double> v;
  std::int64_t t = 0;
};

/// AdEMAMix: AdamW's fast moment plus a slow EMA weighted by alpha(t), with
/// beta3(t) and alpha(t) taken from `schedule`. Only m and v are bias corrected.
Update ademamix_step(ParamBlock& block, std::span<const double> grad, AdemamixState& state,
                     const CommonHyper& hyper, const AdamBetas& betas,
                     const EmaScheduleSpec& schedule);

}  // namespace optlab
