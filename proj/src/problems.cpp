#include "optlab/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"
#include "optlab/numerics/linalg.hpp"

namespace optlab {

namespace {

constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kResampleStream = 2;
constexpr std::uint64_t kBatchStream = 3;

}  // namespace

Problem::Problem(std::string name, std::vector<ParamBlock> blocks, std::size_t batch_size)
    : name_(std::move(name)), blocks_(std::move(blocks)), batch_size_(batch_size) {
  if (batch_size_ == 0) throw ContractViolation(name_ + ": batch size must be >= 1");
  for (const auto& b : blocks_) b.validate();
}

Gradients Problem::resampled_grad(const BlockValues&, std::uint64_t) const {
  throw UnsupportedEstimator(name_ + ": no categorical output, Gauss-Newton-Bartlett resampling unavailable");
}

void Problem::check_shape(const BlockValues& params) const {
  if (params.size() != blocks_.size()) throw ContractViolation(name_ + ": wrong number of parameter blocks");
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (params[b].size() != blocks_[b].size()) {
      throw ContractViolation(name_ + ": block '" + blocks_[b].name + "' has the wrong length");
    }
  }
}

std::uint64_t batch_seed(std::uint64_t run_seed, std::int64_t step) noexcept {
  return hash_combine(run_seed, static_cast<std::uint64_t>(step));
}

// ---------------------------------------------------------------- quadratic

namespace {

ParamBlock quadratic_block(std::size_t dim, std::size_t matrix_rows, std::vector<double> x0) {
  ParamBlock block;
  block.name = "x";
  if (matrix_rows > 0) {
    if (dim % matrix_rows != 0) throw ContractViolation("quadratic: matrix_rows must divide dim");
    block.shape = {matrix_rows, dim / matrix_rows};
    block.role = Role::matrix;
  } else {
    block.shape = {dim};
    block.role = Role::vector;
  }
  block.values = std::move(x0);
  return block;
}

}  // namespace

QuadraticProblem::QuadraticProblem(Matrix a, std::vector<double> b, std::vector<double> x0, QuadraticOptions options)
    : Problem("quadratic", {quadratic_block(b.size(), options.matrix_rows, std::move(x0))},
              options.batch.batch_size),
      a_(std::move(a)),
      b_(std::move(b)),
      sigma_(options.batch.noise_scale) {
  const std::size_t n = b_.size();
  if (a_.rows() != n || a_.cols() != n) throw ContractViolation("quadratic: A must be dim x dim");
  if (sigma_ < 0.0) throw ContractViolation("quadratic: noise scale must be >= 0");
  x_star_ = solve_spd(a_, b_);
  offset_ = 0.5 * kernels::dot(b_, x_star_);

  const SymmetricEigen eig = sym_eigen(a_);
  design_ = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (eig.values[k] <= 0.0) throw DegenerateInput("quadratic: A must be positive definite");
    const double s = std::sqrt(eig.values[k]);
    for (std::size_t j = 0; j < n; ++j) design_(k, j) = s * eig.vectors(j, k);
  }
}

double QuadraticProblem::exact_loss(std::span<const double> x) const {
  const std::size_t n = b_.size();
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += a_(i, j) * x[j];
    quad += x[i] * row;
  }
  return 0.5 * quad - kernels::dot(b_, x) + offset_;
}

double QuadraticProblem::eval_loss(const BlockValues& params) const {
  check_shape(params);
  return exact_loss(params[0]);
}

LossGrad QuadraticProblem::loss_and_grad(const BlockValues& params, std::uint64_t seed) const {
  check_shape(params);
  const std::size_t n = b_.size();
  const auto& x = params[0];

  std::vector<double> noise(n, 0.0);
  if (sigma_ > 0.0) {
    Rng rng(seed, kNoiseStream);
    const std::size_t bsz = batch_size();
    for (std::size_t s = 0; s < bsz; ++s) {
      for (std::size_t i = 0; i < n; ++i) noise[i] += rng.normal();
    }
    for (double& v : noise) v *= sigma_ / static_cast<double>(bsz);
  }

  LossGrad out;
  out.grads.assign(1, std::vector<double>(n));
  auto& g = out.grads[0];
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += a_(i, j) * x[j];
    quad += x[i] * row;
    g[i] = row - b_[i] + noise[i];
  }
  out.loss = 0.5 * quad - kernels::dot(b_, x) + offset_ + kernels::dot(noise, x);
  return out;
}

Gradients QuadraticProblem::resampled_grad(const BlockValues& params, std::uint64_t seed) const {
  check_shape(params);
  const std::size_t n = b_.size();
  const std::size_t bsz = batch_size();
  Rng rng(seed, kResampleStream);
  std::vector<double> eps(n, 0.0);
  for (std::size_t s = 0; s < bsz; ++s) {
    for (std::size_t k = 0; k < n; ++k) eps[k] += rng.normal();
  }
  for (double& e : eps) e /= static_cast<double>(bsz);
  // Residual of the Gaussian model with y ~ N(Mx, I) is -eps; the gradient is Mᵀ(Mx - y).
  Gradients out(1, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) out[0][j] -= design_(k, j) * eps[k];
  }
  return out;
}

std::unique_ptr<QuadraticProblem> quadratic_problem(std::size_t dim, double condition, Rng& rng,
                                                    QuadraticOptions options) {
  if (dim < 1) throw ContractViolation("quadratic: dim must be >= 1");
  if (!(condition >= 1.0)) throw ContractViolation("quadratic: condition must be >= 1");

  Matrix gauss(dim, dim);
  for (double& v : gauss.values()) v = rng.normal();
  const Matrix u = qr_orthonormal(gauss);

  std::vector<double> lambda(dim, 1.0);
  for (std::size_t k = 0; k < dim && dim > 1; ++k) {
    lambda[k] = std::pow(condition, static_cast<double>(k) / static_cast<double>(dim - 1));
  }
  Matrix a(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += u(i, k) * lambda[k] * u(j, k);
      a(i, j) = s;
      a(j, i) = s;
    }
  }
  const std::vector<double> x_star = rng_normal(rng, dim);
  std::vector<double> b(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) b[i] += a(i, j) * x_star[j];
  }
  return std::make_unique<QuadraticProblem>(std::move(a), std::move(b), std::vector<double>(dim, 0.0), options);
}

// --------------------------------------------------------------- rosenbrock

namespace {

ParamBlock rosenbrock_block(std::size_t dim) {
  if (dim < 2 || dim % 2 != 0) throw ContractViolation("rosenbrock: dim must be even and >= 2");
  ParamBlock block;
  block.name = "x";
  block.shape = {dim};
  block.role = Role::vector;
  block.values.resize(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    block.values[i] = -1.2;
    block.values[i + 1] = 1.0;
  }
  return block;
}

}  // namespace

RosenbrockProblem::RosenbrockProblem(std::size_t dim) : Problem("rosenbrock", {rosenbrock_block(dim)}, 1) {}

LossGrad RosenbrockProblem::loss_and_grad(const BlockValues& params, std::uint64_t) const {
  check_shape(params);
  const auto& x = params[0];
  LossGrad out;
  out.grads.assign(1, std::vector<double>(x.size(), 0.0));
  auto& g = out.grads[0];
  for (std::size_t i = 0; i < x.size(); i += 2) {
    const double u = x[i], w = x[i + 1];
    const double r = w - u * u;
    out.loss += 100.0 * r * r + (1.0 - u) * (1.0 - u);
    g[i] = -400.0 * u * r - 2.0 * (1.0 - u);
    g[i + 1] = 200.0 * r;
  }
  return out;
}

double RosenbrockProblem::eval_loss(const BlockValues& params) const { return loss_and_grad(params, 0).loss; }

std::unique_ptr<RosenbrockProblem> rosenbrock_problem(std::size_t dim) {
  return std::make_unique<RosenbrockProblem>(dim);
}

// ---------------------------------------------------------------------- mlp

namespace {

enum MlpBlock : std::size_t { kW1 = 0, kB1 = 1, kW2 = 2, kB2 = 3 };

std::vector<ParamBlock> mlp_blocks(std::size_t in_dim, std::size_t hidden, std::size_t classes, Rng& rng,
                                   const MlpOptions& options) {
  if (in_dim < 1 || hidden < 1 || classes < 1) throw ContractViolation("mlp: all sizes must be >= 1");
  std::vector<ParamBlock> blocks;
  blocks.push_back(make_block("w1", {hidden, in_dim}, Role::matrix));
  blocks.push_back(make_block("b1", {hidden}, Role::vector));
  blocks.push_back(make_block("w2", {classes, hidden}, Role::output_head));
  blocks.push_back(make_block("b2", {classes}, Role::vector));
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& v : blocks[kW1].values) v = s1 * rng.normal();
  for (double& v : blocks[kW2].values) v = options.output_init_scale * rng.normal();
  return blocks;
}

}  // namespace

MlpProblem::MlpProblem(std::size_t in_dim, std::size_t hidden, std::size_t classes, std::size_t n_samples, Rng& rng,
                       MlpOptions options)
    : Problem("mlp", mlp_blocks(in_dim, hidden, classes, rng, options), options.batch_size),
      in_dim_(in_dim),
      hidden_(hidden),
      classes_(classes) {
  if (n_samples < 1) throw ContractViolation("mlp: n_samples must be >= 1");
  Matrix centers(classes, in_dim);
  for (double& v : centers.values()) v = options.cluster_separation * rng.normal();
  const double norm = 1.0 / std::sqrt(1.0 + options.cluster_separation * options.cluster_separation);
  inputs_ = Matrix(n_samples, in_dim);
  labels_.resize(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::size_t y = s % classes;
    labels_[s] = y;
    for (std::size_t k = 0; k < in_dim; ++k) inputs_(s, k) = norm * (centers(y, k) + rng.normal());
  }
}

std::vector<std::size_t> MlpProblem::draw_batch(std::uint64_t seed) const {
  Rng rng(seed, kBatchStream);
  std::vector<std::size_t> idx(batch_size());
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(labels_.size()));
  return idx;
}

std::vector<std::vector<double>> MlpProblem::predict(const BlockValues& params,
                                                     const std::vector<std::size_t>& idx) const {
  const auto& w1 = params[kW1];
  const auto& b1 = params[kB1];
  const auto& w2 = params[kW2];
  const auto& b2 = params[kB2];
  std::vector<std::vector<double>> probs(idx.size(), std::vector<double>(classes_));
  std::vector<double> h(hidden_);
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const double* x = inputs_.data().data() + idx[s] * in_dim_;
    for (std::size_t j = 0; j < hidden_; ++j) {
      double a = b1[j];
      for (std::size_t k = 0; k < in_dim_; ++k) a += w1[j * in_dim_ + k] * x[k];
      h[j] = std::tanh(a);
    }
    auto& p = probs[s];
    for (std::size_t c = 0; c < classes_; ++c) {
      double z = b2[c];
      for (std::size_t j = 0; j < hidden_; ++j) z += w2[c * hidden_ + j] * h[j];
      p[c] = z;
    }
    const double zmax = *std::max_element(p.begin(), p.end());
    double total = 0.0;
    for (double& z : p) total += (z = std::exp(z - zmax));
    for (double& z : p) z /= total;
  }
  return probs;
}

LossGrad MlpProblem::evaluate(const BlockValues& params, const std::vector<std::size_t>& idx,
                              const std::vector<std::size_t>& labels) const {
  check_shape(params);
  const auto& w1 = params[kW1];
  const auto& b1 = params[kB1];
  const auto& w2 = params[kW2];
  const auto& b2 = params[kB2];

  LossGrad out;
  out.grads.resize(4);
  for (std::size_t b = 0; b < 4; ++b) out.grads[b].assign(params[b].size(), 0.0);
  auto& gw1 = out.grads[kW1];
  auto& gb1 = out.grads[kB1];
  auto& gw2 = out.grads[kW2];
  auto& gb2 = out.grads[kB2];

  const double inv_n = 1.0 / static_cast<double>(idx.size());
  std::vector<double> h(hidden_), z(classes_), dz(classes_), da(hidden_);
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const double* x = inputs_.data().data() + idx[s] * in_dim_;
    for (std::size_t j = 0; j < hidden_; ++j) {
      double a = b1[j];
      for (std::size_t k = 0; k < in_dim_; ++k) a += w1[j * in_dim_ + k] * x[k];
      h[j] = std::tanh(a);
    }
    for (std::size_t c = 0; c < classes_; ++c) {
      double v = b2[c];
      for (std::size_t j = 0; j < hidden_; ++j) v += w2[c * hidden_ + j] * h[j];
      z[c] = v;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) total += std::exp(z[c] - zmax);
    const double lse = zmax + std::log(total);
    out.loss += (lse - z[labels[s]]) * inv_n;

    for (std::size_t c = 0; c < classes_; ++c) {
      dz[c] = (std::exp(z[c] - lse) - (c == labels[s] ? 1.0 : 0.0)) * inv_n;
      gb2[c] += dz[c];
    }
    std::fill(da.begin(), da.end(), 0.0);
    for (std::size_t c = 0; c < classes_; ++c) {
      for (std::size_t j = 0; j < hidden_; ++j) {
        gw2[c * hidden_ + j] += dz[c] * h[j];
        da[j] += w2[c * hidden_ + j] * dz[c];
      }
    }
    for (std::size_t j = 0; j < hidden_; ++j) {
      da[j] *= 1.0 - h[j] * h[j];
      gb1[j] += da[j];
      for (std::size_t k = 0; k < in_dim_; ++k) gw1[j * in_dim_ + k] += da[j] * x[k];
    }
  }
  return out;
}

LossGrad MlpProblem::loss_and_grad(const BlockValues& params, std::uint64_t seed) const {
  const auto idx = draw_batch(seed);
  std::vector<std::size_t> labels(idx.size());
  for (std::size_t s = 0; s < idx.size(); ++s) labels[s] = labels_[idx[s]];
  return evaluate(params, idx, labels);
}

Gradients MlpProblem::resampled_grad(const BlockValues& params, std::uint64_t seed) const {
  check_shape(params);
  const auto idx = draw_batch(seed);
  const auto probs = predict(params, idx);
  Rng rng(seed, kResampleStream);
  std::vector<std::size_t> labels(idx.size());
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = classes_ - 1;
    for (std::size_t c = 0; c < classes_; ++c) {
      acc += probs[s][c];
      if (u < acc) {
        pick = c;
        break;
      }
    }
    labels[s] = pick;
  }
  return evaluate(params, idx, labels).grads;
}

double MlpProblem::eval_loss(const BlockValues& params) const {
  std::vector<std::size_t> idx(labels_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return evaluate(params, idx, labels_).loss;
}

std::unique_ptr<MlpProblem> mlp_classification_problem(std::size_t in_dim, std::size_t hidden, std::size_t classes,
                                                       std::size_t n_samples, Rng& rng, MlpOptions options) {
  return std::make_unique<MlpProblem>(in_dim, hidden, classes, n_samples, rng, options);
}

// ------------------------------------------------------- finite differences

Gradients finite_difference_gradient(const Problem& problem, const BlockValues& params, std::uint64_t seed,
                                     double h) {
  if (!(h > 0.0)) throw ContractViolation("finite_difference_gradient: h must be > 0");
  Gradients out(params.size());
  BlockValues probe = params;
  for (std::size_t b = 0; b < params.size(); ++b) {
    out[b].resize(params[b].size());
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double saved = probe[b][i];
      probe[b][i] = saved + h;
      const double up = problem.loss(probe, seed);
      probe[b][i] = saved - h;
      const double down = problem.loss(probe, seed);
      probe[b][i] = saved;
      out[b][i] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace optlab
