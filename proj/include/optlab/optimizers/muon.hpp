#pragma once

#include <span>
#include <vector>

#include "optlab/optimizers/adam_family.hpp"
#include "optlab/optimizers/common.hpp"
#include "optlab/optimizers/newton_schulz.hpp"

namespace optlab {

struct MuonState {
  std::vector<double> m;
  AdamLikeState adam;  // used when the block is not a matrix
  int ns_iters = kDefaultNsIters;
  NsCoeffs ns_coeffs;
};

struct MuonHyper {
  double matrix_gamma = 0.01;  // gamma^M
  double momentum = 0.95;
  CommonHyper adam;            // gamma^A, lambda, eps for routed blocks
  AdamBetas adam_betas{0.8, 0.999};
};

/// Muon. Matrix blocks: Nesterov momentum then Newton-Schulz, no weight decay.
/// Other roles: one AdamW step with the adam hyperparameters.
/// A zero Nesterov direction gives a zero update.
Update muon_step(ParamBlock& block, std::span<const double> grad, MuonState& state,
                 const MuonHyper& hyper);

struct DmuonHyper {
  double momentum = 0.95;
  double rms_scale = 0.2;
  AdamBetas adam_betas{0.8, 0.999};
};

/// D-Muon. Matrix blocks: x <- x - gamma (rms_scale sqrt(max(rows, cols)) NS(g') + lambda x).
/// Other roles: AdamW with the same gamma and lambda.
Update dmuon_step(ParamBlock& block, std::span<const double> grad, MuonState& state,
                  const CommonHyper& hyper, const DmuonHyper& dmuon);

namespace detail {
/// Nesterov direction beta*m + g after m <- beta*m + g, reshaped to the block's matrix view.
Matrix nesterov_direction(const ParamBlock& block, std::span<const double> grad,
                          std::vector<double>& m, double beta, std::string_view who);
}  // namespace detail

}  // namespace optlab
