#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "optlab/optimizers/common.hpp"

namespace optlab {

struct ProdigyBlockState {
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> s;
  std::vector<double> x0;
};

/// d and r are shared by every block of a model; the rest is per block.
struct ProdigyState {
  double d = 1e-6;
  double r = 0.0;
  std::int64_t t = 0;
  std::vector<ProdigyBlockState> blocks;
};

struct ProdigyHyper {
  AdamBetas betas{0.9, 0.999};
  bool bias_correction = true;
  double d0 = 1e-6;
};

struct ProdigyReport {
  std::vector<Update> updates;
  double d_used = 0.0;        // d_t applied in this step
  double d_next = 0.0;        // d_{t+1}
  double effective_lr = 0.0;  // gamma_t * d_t
};

/// One Prodigy step over all blocks. hyper.gamma is the (possibly scheduled)
/// base rate that the internal bias correction then multiplies.
ProdigyReport prodigy_step(std::span<ParamBlock> blocks, std::span<const std::vector<double>> grads,
                           ProdigyState& state, const CommonHyper& hyper, const ProdigyHyper& prodigy);

}  // namespace optlab
