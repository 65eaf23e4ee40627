#include <gtest/gtest.h>

#include <cmath>

#include "optlab/error.hpp"
#include "optlab/problems.hpp"
#include "optlab/verify.hpp"

using namespace optlab;

namespace {

double rel_error(const Gradients& a, const Gradients& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      num += (a[k][i] - b[k][i]) * (a[k][i] - b[k][i]);
      den += b[k][i] * b[k][i];
    }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

BlockValues random_point(const Problem& p, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  BlockValues v = values_of(p.initial_blocks());
  for (auto& block : v)
    for (double& x : block) x += scale * rng.normal();
  return v;
}

// f(x) = 3x on one scalar block.
class LinearProblem final : public Problem {
 public:
  LinearProblem() : Problem("linear", {make_block("x", {1}, Role::scalar)}, 1) {}
  LossGrad loss_and_grad(const BlockValues& p, std::uint64_t) const override { return {3.0 * p[0][0], {{3.0}}}; }
  double eval_loss(const BlockValues& p) const override { return 3.0 * p[0][0]; }
};

}  // namespace

TEST(Quadratic, OneDimensionalHandCase) {
  QuadraticProblem q(Matrix{{1.0}}, {0.0}, {0.0}, {});
  const LossGrad lg = q.loss_and_grad({{3.0}}, 1);
  EXPECT_EQ(lg.grads[0][0], 3.0);
  EXPECT_EQ(lg.loss, 4.5);
}

TEST(Quadratic, MinimizerHasZeroGradientAndLoss) {
  Rng rng(1);
  const auto q = quadratic_problem(20, 100.0, rng);
  const LossGrad lg = q->loss_and_grad({q->minimizer()}, 7);
  for (double g : lg.grads[0]) EXPECT_NEAR(g, 0.0, 1e-10);
  EXPECT_NEAR(q->eval_loss({q->minimizer()}), 0.0, 1e-12);
}

TEST(Quadratic, FiniteDifferences) {
  Rng rng(2);
  const auto q = quadratic_problem(20, 100.0, rng);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const BlockValues x = random_point(*q, 10 + s);
    EXPECT_LE(rel_error(finite_difference_gradient(*q, x, 5, 1e-5), q->loss_and_grad(x, 5).grads), 1e-7);
  }
  Rng small(3);
  const auto q5 = quadratic_problem(5, 10.0, small);
  const BlockValues x = random_point(*q5, 4);
  EXPECT_LE(rel_error(finite_difference_gradient(*q5, x, 1, 1e-5), q5->loss_and_grad(x, 1).grads), 1e-7);
}

TEST(Quadratic, NoisyGradientWithSharedBatchSeed) {
  Rng rng(4);
  const auto q = quadratic_problem(20, 100.0, rng, {{4, 0.5}, 0});
  for (std::uint64_t s = 0; s < 3; ++s) {
    const BlockValues x = random_point(*q, 20 + s);
    EXPECT_LE(rel_error(finite_difference_gradient(*q, x, 99 + s, 1e-5), q->loss_and_grad(x, 99 + s).grads), 1e-6);
  }
}

TEST(Quadratic, NoiseShrinksWithBatch) {
  Rng r1(5), r64(5);
  const auto q1 = quadratic_problem(20, 10.0, r1, {{1, 2.0}, 0});
  const auto q64 = quadratic_problem(20, 10.0, r64, {{64, 2.0}, 0});
  const BlockValues x = {q1->minimizer()};
  double var1 = 0.0, var64 = 0.0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    const LossGrad l1 = q1->loss_and_grad(x, s);
    const LossGrad l64 = q64->loss_and_grad(x, s);
    for (double g : l1.grads[0]) var1 += g * g;
    for (double g : l64.grads[0]) var64 += g * g;
  }
  EXPECT_NEAR(var1 / var64, 64.0, 64.0 * 0.15);
}

TEST(Quadratic, MatrixRowsMakeOneMatrixBlock) {
  Rng rng(6);
  const auto q = quadratic_problem(20, 10.0, rng, {{}, 4});
  ASSERT_EQ(q->initial_blocks().size(), 1u);
  EXPECT_EQ(q->initial_blocks()[0].role, Role::matrix);
  EXPECT_EQ(q->initial_blocks()[0].rows(), 4u);
  EXPECT_EQ(q->initial_blocks()[0].cols(), 5u);
}

TEST(Rosenbrock, MinimumAndOrigin) {
  const auto r = rosenbrock_problem(4);
  const LossGrad at_min = r->loss_and_grad({{1, 1, 1, 1}}, 0);
  EXPECT_EQ(at_min.loss, 0.0);
  for (double g : at_min.grads[0]) EXPECT_EQ(g, 0.0);
  const auto r2 = rosenbrock_problem(2);
  const LossGrad at_origin = r2->loss_and_grad({{0, 0}}, 0);
  EXPECT_EQ(at_origin.loss, 1.0);
  EXPECT_EQ(at_origin.grads[0], (std::vector<double>{-2.0, 0.0}));
}

TEST(Rosenbrock, FiniteDifferences) {
  const auto r = rosenbrock_problem(6);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const BlockValues x = random_point(*r, 30 + s, 0.5);
    EXPECT_LE(rel_error(finite_difference_gradient(*r, x, 0, 1e-5), r->loss_and_grad(x, 0).grads), 1e-7);
  }
}

TEST(Rosenbrock, OddDimensionRejected) { EXPECT_THROW(rosenbrock_problem(3), ContractViolation); }

TEST(Mlp, UntrainedLossNearUniformEntropy) {
  Rng rng(7);
  const auto m = mlp_classification_problem(8, 16, 4, 256, rng);
  EXPECT_NEAR(m->eval_loss(values_of(m->initial_blocks())), std::log(4.0), 0.1);
}

TEST(Mlp, BlockRoles) {
  Rng rng(8);
  const auto m = mlp_classification_problem(8, 16, 4, 64, rng);
  const auto& b = m->initial_blocks();
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0].role, Role::matrix);
  EXPECT_EQ(b[0].rows(), 16u);
  EXPECT_EQ(b[0].cols(), 8u);
  EXPECT_EQ(b[1].role, Role::vector);
  EXPECT_EQ(b[2].role, Role::output_head);
  EXPECT_EQ(b[3].role, Role::vector);
}

TEST(Mlp, FiniteDifferencesPerBlock) {
  Rng rng(9);
  const auto m = mlp_classification_problem(6, 10, 4, 64, rng, {16, 2.0, 0.5});
  for (const auto& r : verify::finite_difference_errors(*m, 3, 19)) {
    EXPECT_LE(r.rel_error, 1e-6) << r.block << " point " << r.point;
  }
}

TEST(Mlp, ResampledGradientGivesNonNegativeCurvature) {
  Rng rng(10);
  const auto m = mlp_classification_problem(6, 10, 4, 64, rng, {16, 2.0, 0.5});
  const Gradients g = m->resampled_grad(values_of(m->initial_blocks()), 3);
  for (const auto& block : g)
    for (double v : block) EXPECT_GE(16.0 * v * v, 0.0);
  EXPECT_EQ(g.size(), 4u);
}

TEST(FiniteDifference, LinearFunctionIsExact) {
  const LinearProblem p;
  for (double h : {1e-3, 1e-5, 0.25}) {
    EXPECT_NEAR(finite_difference_gradient(p, {{0.7}}, 0, h)[0][0], 3.0, 1e-9);
  }
}

TEST(FiniteDifference, AllBuiltinProblems) {
  for (const auto& p : verify::gradient_check_problems()) {
    for (const auto& r : verify::finite_difference_errors(*p, 3, 19)) EXPECT_LE(r.rel_error, 1e-6) << r.problem << "/" << r.block;
  }
}

TEST(Problem, EvaluationsArePureInSeed) {
  Rng rng(11);
  const auto m = mlp_classification_problem(6, 10, 4, 64, rng, {8, 2.0, 0.5});
  const BlockValues x = values_of(m->initial_blocks());
  EXPECT_EQ(m->loss_and_grad(x, 42).grads, m->loss_and_grad(x, 42).grads);
  EXPECT_NE(m->loss_and_grad(x, 42).loss, m->loss_and_grad(x, 43).loss);
  EXPECT_NE(batch_seed(1, 1), batch_seed(1, 2));
}

TEST(Problem, ShapeMismatchThrows) {
  const auto r = rosenbrock_problem(4);
  EXPECT_THROW(r->loss_and_grad({{1, 2}}, 0), ContractViolation);
  EXPECT_THROW(r->resampled_grad({{1, 2, 3, 4}}, 0), UnsupportedEstimator);
}
