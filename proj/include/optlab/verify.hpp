#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optlab/optimizers/optimizer.hpp"
#include "optlab/problems.hpp"

namespace optlab::verify {

/// Fault injections understood by the checks.
///   adamw-eps: production AdamW runs with a mutated epsilon.
std::vector<std::string> known_injections();

struct Options {
  std::optional<std::string> inject;
  /// Reference SOAP uses its own Jacobi/Gram-Schmidt instead of the shared linalg.
  bool independent_linalg = false;
};

// Measurements shared by `optlab verify` and the acceptance tests.

/// Largest per-coordinate |production - reference| over `steps` steps of a
/// mixed-role block set driven by a parameter-dependent noisy gradient field.
double reference_deviation(OptimizerKind kind, int steps = 200, std::uint64_t seed = 7, const Options& opts = {});

/// Largest |SOAP - AdamW| over `steps` steps with Q = I frozen.
double soap_identity_deviation(int steps = 100, std::uint64_t seed = 11);

/// True when the parameter trajectory is bit-identical under gradient scaling by c.
bool sign_scale_invariant(OptimizerKind kind, double c, int steps = 200, std::uint64_t seed = 13);

struct NsRange {
  double min_sv = 0.0;
  double max_sv = 0.0;
};
/// Singular values (SVD oracle) of 5-iteration Newton-Schulz on `count`
/// Gaussian n x n matrices.
NsRange newton_schulz_range(int count = 50, std::size_t n = 64, std::uint64_t seed = 17);
/// Regression band frozen from newton_schulz_range() with the default
/// coefficients (measured [0.005887, 1.202238], rounded outward).
inline constexpr NsRange kNsBand{0.0058, 1.2025};

struct FdResult {
  std::string problem;
  std::string block;
  int point = 0;
  double rel_error = 0.0;
};
/// Per-block relative l2 error of the analytic gradient against central
/// differences at `points` random points.
std::vector<FdResult> finite_difference_errors(const Problem& problem, int points = 3, std::uint64_t seed = 19,
                                               double h = 1e-5);
/// Quadratic (cond 100, dim 20, noisy), Rosenbrock (dim 6), MLP.
std::vector<std::unique_ptr<Problem>> gradient_check_problems();

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Check {
  std::string name;
  std::string description;
  std::function<CheckResult(const Options&)> run;
};

const std::vector<Check>& checks();
std::vector<CheckResult> run_checks(const Options& opts);
std::string format_results(const std::vector<CheckResult>& results);

}  // namespace optlab::verify
