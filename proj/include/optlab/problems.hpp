#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "optlab/numerics/matrix.hpp"
#include "optlab/numerics/rng.hpp"
#include "optlab/optimizers/param_block.hpp"

namespace optlab {

struct LossGrad {
  double loss = 0.0;
  Gradients grads;
};

struct BatchSpec {
  std::size_t batch_size = 1;
  double noise_scale = 0.0;
};

/// A stochastic objective over a fixed list of parameter blocks. Evaluations
/// are pure functions of (params, batch_seed).
class Problem {
 public:
  virtual ~Problem() = default;

  const std::string& name() const noexcept { return name_; }
  /// Blocks holding the initial point.
  const std::vector<ParamBlock>& initial_blocks() const noexcept { return blocks_; }
  std::size_t batch_size() const noexcept { return batch_size_; }

  virtual LossGrad loss_and_grad(const BlockValues& params, std::uint64_t batch_seed) const = 0;
  virtual double loss(const BlockValues& params, std::uint64_t batch_seed) const {
    return loss_and_grad(params, batch_seed).loss;
  }

  /// Noise-free objective used for final-loss reporting: the exact function
  /// where one exists, the full-data loss for finite datasets.
  virtual double eval_loss(const BlockValues& params) const = 0;

  /// Whether resampled_grad is available (Gauss-Newton-Bartlett curvature).
  virtual bool supports_gnb() const noexcept { return false; }
  /// Gradient of the batch loss against labels drawn from the model's own
  /// predictive distribution. Throws UnsupportedEstimator by default.
  virtual Gradients resampled_grad(const BlockValues& params, std::uint64_t batch_seed) const;

 protected:
  Problem(std::string name, std::vector<ParamBlock> blocks, std::size_t batch_size);
  void check_shape(const BlockValues& params) const;

 private:
  std::string name_;
  std::vector<ParamBlock> blocks_;
  std::size_t batch_size_;
};

/// Batch seed for step t of a run: hash of (run seed, step).
std::uint64_t batch_seed(std::uint64_t run_seed, std::int64_t step) noexcept;

struct QuadraticOptions {
  BatchSpec batch;
  /// When nonzero the parameters form one rows x (dim / rows) block with role
  /// matrix, so the hybrid methods take their matrix path.
  std::size_t matrix_rows = 0;
};

/// f(x) = ½ (x - x*)ᵀ A (x - x*), i.e. ½ xᵀAx - bᵀx plus the constant that makes
/// the minimum 0. Each of B samples adds σ ξᵢᵀx with ξᵢ standard normal, so the
/// batch gradient is Ax - b + σ mean(ξᵢ). Curvature resampling treats f as
/// Gaussian regression with design Λ^½Uᵀ.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(Matrix a, std::vector<double> b, std::vector<double> x0, QuadraticOptions options);

  const Matrix& a() const noexcept { return a_; }
  const std::vector<double>& b() const noexcept { return b_; }
  const std::vector<double>& minimizer() const noexcept { return x_star_; }

  LossGrad loss_and_grad(const BlockValues& params, std::uint64_t batch_seed) const override;
  bool supports_gnb() const noexcept override { return true; }
  Gradients resampled_grad(const BlockValues& params, std::uint64_t batch_seed) const override;

  double eval_loss(const BlockValues& params) const override;
  double exact_loss(std::span<const double> x) const;

 private:
  Matrix a_;
  Matrix design_;  // M with MᵀM = A
  std::vector<double> b_;
  std::vector<double> x_star_;
  double offset_ = 0.0;
  double sigma_ = 0.0;
};

/// Random SPD quadratic with eigenvalues log-spaced in [1, condition] and a
/// random orthogonal eigenbasis; the minimizer is standard normal and the
/// start point is the origin.
std::unique_ptr<QuadraticProblem> quadratic_problem(std::size_t dim, double condition, Rng& rng,
                                                    QuadraticOptions options = {});

/// Sum over pairs (x_{2i}, x_{2i+1}) of 100 (x_{2i+1} - x_{2i}²)² + (1 - x_{2i})².
/// Starts at (-1.2, 1, -1.2, 1, ...). Deterministic.
class RosenbrockProblem final : public Problem {
 public:
  explicit RosenbrockProblem(std::size_t dim);
  LossGrad loss_and_grad(const BlockValues& params, std::uint64_t batch_seed) const override;
  double eval_loss(const BlockValues& params) const override;
};

std::unique_ptr<RosenbrockProblem> rosenbrock_problem(std::size_t dim);

struct MlpOptions {
  std::size_t batch_size = 32;
  double cluster_separation = 2.0;
  double output_init_scale = 0.01;
};

/// Softmax classifier with one tanh hidden layer on Gaussian-cluster data.
/// Blocks: W1 (hidden x in, matrix), b1 (vector), W2 (classes x hidden,
/// output_head), b2 (vector). Batches are drawn with replacement.
class MlpProblem final : public Problem {
 public:
  MlpProblem(std::size_t in_dim, std::size_t hidden, std::size_t classes, std::size_t n_samples, Rng& rng,
             MlpOptions options);

  LossGrad loss_and_grad(const BlockValues& params, std::uint64_t batch_seed) const override;
  bool supports_gnb() const noexcept override { return true; }
  Gradients resampled_grad(const BlockValues& params, std::uint64_t batch_seed) const override;
  /// Mean cross-entropy over the whole dataset.
  double eval_loss(const BlockValues& params) const override;

  std::size_t classes() const noexcept { return classes_; }

 private:
  std::vector<std::size_t> draw_batch(std::uint64_t batch_seed) const;
  /// Mean cross-entropy and gradient against `labels` for the samples `idx`.
  LossGrad evaluate(const BlockValues& params, const std::vector<std::size_t>& idx,
                    const std::vector<std::size_t>& labels) const;
  /// Softmax probabilities, one row per sample of idx.
  std::vector<std::vector<double>> predict(const BlockValues& params, const std::vector<std::size_t>& idx) const;

  std::size_t in_dim_, hidden_, classes_;
  Matrix inputs_;  // n_samples x in_dim
  std::vector<std::size_t> labels_;
};

std::unique_ptr<MlpProblem> mlp_classification_problem(std::size_t in_dim, std::size_t hidden, std::size_t classes,
                                                       std::size_t n_samples, Rng& rng, MlpOptions options = {});

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h with a shared batch seed.
Gradients finite_difference_gradient(const Problem& problem, const BlockValues& params, std::uint64_t batch_seed,
                                     double h);

}  // namespace optlab
