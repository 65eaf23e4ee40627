#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "optlab/numerics/matrix.hpp"
#include "optlab/optimizers/adam_family.hpp"
#include "optlab/optimizers/common.hpp"

namespace optlab {

struct SoapState {
  std::vector<double> m;
  std::vector<double> v;  // in the rotated basis
  Matrix q_l;
  Matrix q_r;
  Matrix l_stat;
  Matrix r_stat;
  std::int64_t t = 0;
  bool initialized = false;
  AdamLikeState adam;  // non-matrix blocks and oversized matrices
};

struct SoapHyper {
  AdamBetas betas{0.9, 0.999};
  /// Refresh period phi; bases are refreshed when t % phi == 1. 0 disables
  /// refreshes (and the l/r statistics).
  std::int64_t precond_freq = 10;
  /// Blocks with a side above this run AdamW.
  std::size_t max_precond_dim = 10000;
  bool bias_correction = true;
  /// Start from identity bases instead of the eigenbases of the first gradient.
  bool identity_init = false;
};

/// SOAP: Adam run in the basis (Q_l, Q_r). Matrix blocks only; other roles
/// take one AdamW step with the same betas. Throws NumericalFailure carrying
/// the step index when a basis computation fails.
Update soap_step(ParamBlock& block, std::span<const double> grad, SoapState& state,
                 const CommonHyper& hyper, const SoapHyper& soap);

}  // namespace optlab
