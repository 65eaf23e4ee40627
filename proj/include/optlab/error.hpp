#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace optlab {

// Caller broke a documented precondition (bad shapes, out-of-range step, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input is valid in shape but mathematically unusable (rank deficiency, zero matrix).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative routine did not converge, or a factorization broke down mid-run.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what, std::int64_t step = -1)
      : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
        step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

// A non-finite value reached a gradient or optimizer buffer; the run must stop.
class PoisonedState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimizer/problem pairing that cannot work (e.g. Sophia without a GNB estimator).
class UnsupportedEstimator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: unknown key, unparsable value, incompatible settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace optlab
