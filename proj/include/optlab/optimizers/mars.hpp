#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "optlab/optimizers/adam_family.hpp"
#include "optlab/optimizers/common.hpp"
#include "optlab/optimizers/newton_schulz.hpp"

namespace optlab {

enum class MarsVariant { adamw, lion, shampoo };

std::string_view to_string(MarsVariant v);
MarsVariant parse_mars_variant(std::string_view name);

struct MarsState {
  std::vector<double> g_prev;  // zeros before the first step
  std::vector<double> m;
  std::vector<double> v;       // adamw variant only
  std::int64_t t = 0;
  AdamLikeState adam_1d;
};

struct MarsHyper {
  MarsVariant variant = MarsVariant::adamw;
  double eta = 0.025;
  CommonHyper matrix{0.003, 0.0, 1e-8};  // gamma^M, lambda^M, eps
  AdamBetas matrix_betas{0.95, 0.99};
  CommonHyper adam{0.001, 0.0, 1e-8};    // gamma^A, lambda^A, eps
  AdamBetas adam_betas{0.8, 0.999};
  int ns_iters = kDefaultNsIters;
  NsCoeffs ns_coeffs;
};

/// MARS on matrix blocks with the corrected gradient
///   c = g + eta * beta1 / (1 - beta1) * (g - g_prev),
/// clipped to unit l2 norm for the adamw and lion variants. Other roles take
/// an AdamW step with the adam hyperparameters.
Update mars_step(ParamBlock& block, std::span<const double> grad, MarsState& state,
                 const MarsHyper& hyper);

}  // namespace optlab
