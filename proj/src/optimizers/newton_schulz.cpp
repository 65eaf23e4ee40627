#include "optlab/optimizers/newton_schulz.hpp"

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

Matrix newton_schulz_orthogonalize(const Matrix& g, int iters, const NsCoeffs& coeffs) {
  if (iters < 1) throw ContractViolation("newton_schulz: iters must be >= 1");
  const double norm = frobenius_norm(g);
  if (norm == 0.0) throw ContractViolation("newton_schulz: zero matrix has no polar factor");

  const bool tall = g.rows() > g.cols();
  Matrix w = tall ? g.transposed() : g;
  for (double& v : w.values()) v /= norm;

  const double a = coeffs.a, b = coeffs.b, c = coeffs.c;
  for (int n = 0; n < iters; ++n) {
    const Matrix gram = kernels::matmul_nt(w, w);
    const Matrix gram_w = kernels::matmul(gram, w);
    const Matrix gram2_w = kernels::matmul(gram, gram_w);
    auto out = w.values();
    auto p1 = gram_w.values();
    auto p2 = gram2_w.values();
    kernels::parallel_for(out.size(), [&](std::size_t i) {
      out[i] = a * out[i] + b * p1[i] + c * p2[i];
    });
  }
  return tall ? w.transposed() : w;
}

}  // namespace optlab
