#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "optlab/optimizers/common.hpp"

namespace optlab {

struct SignState {
  std::vector<double> m;
  std::int64_t t = 0;
};

/// Lion: x <- x - gamma * (sign(beta1*m + (1-beta1)*g) + lambda*x), then
/// m <- beta2*m + (1-beta2)*g.
Update lion_step(ParamBlock& block, std::span<const double> grad, SignState& state,
                 const CommonHyper& hyper, const AdamBetas& betas);

enum class SignumVariant {
  nesterov,  // m <- beta*m + g; direction beta*m + g
  basic,     // m <- beta*m + (1-beta)*g; direction m
  dampened,  // m <- beta*m + (1-tau)*g; direction m
};

std::string_view to_string(SignumVariant v);
SignumVariant parse_signum_variant(std::string_view name);

struct SignumHyper {
  double momentum = 0.95;
  SignumVariant variant = SignumVariant::nesterov;
  double dampening = 0.0;
  /// Folds lambda*x into the gradient before the sign instead of decoupling it.
  /// Only exists to demonstrate why that is wrong for sign methods.
  bool coupled_weight_decay = false;
};

Update signum_step(ParamBlock& block, std::span<const double> grad, SignState& state,
                   const CommonHyper& hyper, const SignumHyper& signum);

}  // namespace optlab
