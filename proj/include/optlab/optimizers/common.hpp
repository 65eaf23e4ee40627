#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "optlab/optimizers/param_block.hpp"

namespace optlab {

/// Per-step scalars shared by every update rule. gamma is the learning rate
/// for this step (already scheduled); lambda is decoupled weight decay.
struct CommonHyper {
  double gamma = 1e-3;
  double lambda = 0.0;
  double epsilon = 1e-8;
};

struct AdamBetas {
  double beta1 = 0.9;
  double beta2 = 0.999;
};

/// The applied change x_new - x_old, one entry per coordinate.
using Update = std::vector<double>;

/// sign(0) == 0.
constexpr double sign_of(double v) noexcept { return static_cast<double>(int{v > 0.0} - int{v < 0.0}); }

namespace detail {

/// Throws PoisonedState naming `who` if any entry is non-finite.
void require_finite(std::span<const double> values, std::string_view who, std::string_view what);

/// Throws ContractViolation on length mismatch.
void require_same_size(std::size_t expected, std::size_t got, std::string_view who);

/// Zero-initialise a lazily created buffer, or check its length.
void ensure_buffer(std::vector<double>& buf, std::size_t n, std::string_view who);

}  // namespace detail
}  // namespace optlab
