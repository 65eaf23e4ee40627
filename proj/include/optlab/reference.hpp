#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "optlab/optimizers/optimizer.hpp"

// Plain-loop reference implementations of every step rule. They share no
// arithmetic with the production kernels (own matmul, Newton-Schulz, Jacobi
// eigensolver and Gram-Schmidt QR) and exist only as test oracles.
namespace optlab::reference {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, rows of equal length

Mat to_mat(const Vec& flat, std::size_t rows, std::size_t cols);
Vec to_flat(const Mat& m);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);

/// Quintic Newton-Schulz with the same normalisation and transpose rule as the
/// production code.
Mat newton_schulz(const Mat& g, int iters, double a, double b, double c);

/// Cyclic Jacobi. Eigenvectors in columns, eigenvalues descending, each column
/// signed so that its largest-magnitude entry is positive.
Mat jacobi_eigenvectors(const Mat& sym);

/// Q of A = QR via twice-iterated classical Gram-Schmidt, R with positive diagonal.
Mat gram_schmidt_q(const Mat& a);

/// Where SOAP takes its eigenbasis and QR from. `shared` uses the production
/// linalg layer; `independent` uses the Jacobi and Gram-Schmidt routines above.
/// The first SOAP step rotates the gradient into its own singular basis, so the
/// off-diagonal rotated entries are rounding noise and two different
/// eigensolvers disagree there by about 1e-10 after the epsilon guard.
enum class Linalg { shared, independent };

class Optimizer {
 public:
  Optimizer(OptimizerConfig config, const std::vector<ParamBlock>& blocks, Linalg linalg = Linalg::shared);

  bool needs_initial_gradient() const { return config_.kind == OptimizerKind::adopt && !adopt_ready_; }
  void initial_gradient(const Gradients& g);
  /// Point where the next gradient must be evaluated (y for SF-AdamW).
  BlockValues gradient_point(const std::vector<ParamBlock>& blocks);
  bool needs_curvature() const;
  /// `lr` is the main-group rate; `lr_factor` scales matrix_lr.
  void step(std::vector<ParamBlock>& blocks, const Gradients& g, double lr, double lr_factor,
            const Gradients* curvature, std::size_t batch_size, std::int64_t total_steps);
  double prodigy_d() const { return d_; }

 private:
  struct Slot {
    Vec m, m2, v, h, z, xa, y, g_prev;
    Mat ql, qr, ls, rs;
    std::int64_t t = 0;
    bool soap_ready = false;
  };

  void adam(ParamBlock& p, const Vec& g, Slot& s, double lr, double wd, double b1, double b2);
  void step_one(std::size_t i, ParamBlock& p, const Vec& g, double lr, double mlr, const Gradients* curvature,
                std::size_t batch_size, std::int64_t total_steps);
  void prodigy(std::vector<ParamBlock>& blocks, const Gradients& g, double lr);

  OptimizerConfig config_;
  Linalg linalg_;
  std::vector<Slot> slots_;
  bool adopt_ready_ = false;
  std::int64_t sophia_t_ = 0;
  // Prodigy globals
  double d_ = 0.0;
  double r_ = 0.0;
  std::int64_t prodigy_t_ = 0;
};

}  // namespace optlab::reference
