#pragma once

#include "optlab/numerics/matrix.hpp"

namespace optlab {

struct NsCoeffs {
  double a = 3.4445;
  double b = -4.7750;
  double c = 2.0315;
};

inline constexpr int kDefaultNsIters = 5;

/// Quintic Newton-Schulz iteration towards the polar factor of g:
///   w0 = g / ||g||_F,  w <- a w + b (w wᵀ) w + c (w wᵀ)² w.
/// Wide orientation is used internally (rows > cols runs on gᵀ).
/// Throws ContractViolation for a zero matrix or iters < 1.
Matrix newton_schulz_orthogonalize(const Matrix& g, int iters = kDefaultNsIters,
                                   const NsCoeffs& coeffs = {});

}  // namespace optlab
