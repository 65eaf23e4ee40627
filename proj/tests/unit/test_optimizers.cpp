#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"
#include "optlab/numerics/linalg.hpp"
#include "optlab/numerics/rng.hpp"
#include "optlab/optimizers/optimizer.hpp"
#include "optlab/reference.hpp"
#include "optlab/verify.hpp"

using namespace optlab;

namespace {

ParamBlock scalar_block(double x0) {
  ParamBlock b = make_block("x", {1}, Role::scalar);
  b.values[0] = x0;
  return b;
}

ParamBlock random_block(std::string name, std::vector<std::size_t> shape, Role role, std::uint64_t seed) {
  ParamBlock b = make_block(std::move(name), std::move(shape), role);
  Rng rng(seed);
  b.values = rng_normal(rng, b.size());
  return b;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return rng_normal(rng, n);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

// ---- AdamW family ---------------------------------------------------------

TEST(AdamW, ZeroGradientLeavesParameters) {
  ParamBlock b = random_block("w", {3}, Role::vector, 1);
  const auto before = b.values;
  AdamLikeState s;
  const Update u = adamw_step(b, std::vector<double>(3, 0.0), s, {0.1, 0.0, 1e-8}, {0.9, 0.999});
  EXPECT_EQ(b.values, before);
  EXPECT_EQ(u, std::vector<double>(3, 0.0));
}

TEST(AdamW, FirstStepIsAlmostSignStep) {
  ParamBlock b = scalar_block(0.0);
  AdamLikeState s;
  adamw_step(b, std::vector<double>{2.0}, s, {0.1, 0.0, 1e-8}, {0.9, 0.999});
  // -0.1 * 2 / (2 + 1e-8)
  EXPECT_NEAR(b.values[0], -0.0999999995, 1e-16);
}

TEST(AdamW, TunedDefaults) {
  const auto c = OptimizerConfig::defaults_for(OptimizerKind::adamw);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.999);
}

TEST(AdamW, RejectsNonFiniteGradient) {
  ParamBlock b = scalar_block(1.0);
  AdamLikeState s;
  EXPECT_THROW(adamw_step(b, std::vector<double>{NAN}, s, {}, {}), PoisonedState);
  EXPECT_THROW(adamw_step(b, std::vector<double>{1.0, 2.0}, s, {}, {}), ContractViolation);
}

TEST(Adopt, ScalarOracle) {
  ParamBlock b = scalar_block(0.0);
  AdoptState s;
  adopt_initialize(s, std::vector<double>{1.0});
  adopt_step(b, std::vector<double>{1.0}, s, {0.1, 0.0, 1e-6}, {0.9, 0.9999});
  EXPECT_NEAR(s.m[0], 0.1, 1e-16);
  EXPECT_NEAR(b.values[0], -0.01, 1e-17);
}

TEST(Adopt, ClampBoundIsFourthRootOfStep) {
  ParamBlock b = scalar_block(0.0);
  AdoptState s;
  adopt_initialize(s, std::vector<double>{1.0});
  s.t = 15;  // the next step is t = 16, bound 16^(1/4) = 2
  adopt_step(b, std::vector<double>{5.0}, s, {0.1, 0.0, 1e-6}, {0.9, 0.9999});
  EXPECT_NEAR(s.m[0], 0.1 * 2.0, 1e-16);
}

TEST(Adopt, StepBeforeInitialisationThrows) {
  ParamBlock b = scalar_block(0.0);
  AdoptState s;
  EXPECT_THROW(adopt_step(b, std::vector<double>{1.0}, s, {}, {}), ContractViolation);
  EXPECT_EQ(OptimizerConfig::defaults_for(OptimizerKind::adopt).epsilon, 1e-6);
}

TEST(Ademamix, ZeroGradientStream) {
  ParamBlock b = random_block("w", {4}, Role::vector, 2);
  const auto before = b.values;
  AdemamixState s;
  for (int i = 0; i < 5; ++i) {
    ademamix_step(b, std::vector<double>(4, 0.0), s, {0.1, 0.0, 1e-8}, {0.9, 0.999}, {8.0, 0.9999, 0.9, 100, 100});
  }
  EXPECT_EQ(s.m_slow, std::vector<double>(4, 0.0));
  EXPECT_EQ(b.values, before);
}

TEST(Ademamix, FirstStepCloseToAdamW) {
  ParamBlock a = random_block("w", {4}, Role::vector, 3);
  ParamBlock b = a;
  const auto g = random_vector(4, 4);
  AdemamixState s;
  AdamLikeState sa;
  ademamix_step(a, g, s, {0.01, 0.0, 1e-8}, {0.9, 0.999}, {8.0, 0.9999, 0.9, 1000000, 1000000});
  adamw_step(b, g, sa, {0.01, 0.0, 1e-8}, {0.9, 0.999});
  EXPECT_LE(max_abs_diff(a.values, b.values), 1e-6);
}

// ---- sign methods ---------------------------------------------------------

TEST(Lion, ScalarOracle) {
  ParamBlock b = scalar_block(0.0);
  SignState s;
  lion_step(b, std::vector<double>{1.5}, s, {0.1, 0.0, 0.0}, {0.9, 0.99});
  EXPECT_NEAR(b.values[0], -0.1, 1e-17);
  EXPECT_EQ(s.m[0], (1.0 - 0.99) * 1.5);
}

TEST(Lion, SignOfZeroIsZero) {
  ParamBlock b = scalar_block(0.5);
  SignState s;
  lion_step(b, std::vector<double>{0.0}, s, {0.1, 0.0, 0.0}, {0.9, 0.99});
  EXPECT_EQ(b.values[0], 0.5);
  EXPECT_EQ(sign_of(0.0), 0.0);
  EXPECT_EQ(sign_of(-0.0), 0.0);
  EXPECT_EQ(sign_of(-2.0), -1.0);
  EXPECT_EQ(sign_of(NAN), 0.0);
}

TEST(Signum, ScalarOracle) {
  ParamBlock b = scalar_block(0.0);
  SignState s;
  signum_step(b, std::vector<double>{-3.0}, s, {0.1, 0.0, 0.0}, {0.95, SignumVariant::nesterov, 0.0, false});
  EXPECT_EQ(s.m[0], -3.0);
  EXPECT_NEAR(b.values[0], 0.1, 1e-17);
}

TEST(Signum, DampeningEqualToBetaIsEmaMomentum) {
  ParamBlock a = random_block("w", {6}, Role::vector, 5);
  ParamBlock b = a;
  SignState sa, sb;
  for (int t = 0; t < 20; ++t) {
    const auto g = random_vector(6, 100 + t);
    signum_step(a, g, sa, {0.01, 0.1, 0.0}, {0.9, SignumVariant::dampened, 0.9, false});
    signum_step(b, g, sb, {0.01, 0.1, 0.0}, {0.9, SignumVariant::basic, 0.0, false});
  }
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(sa.m, sb.m);
}

TEST(Signum, CoupledDecayFoldsIntoSign) {
  // x = 1, g = 0.1, lambda = 0.5: coupled sign(0.1 + 0.5) = +1 while decoupled
  // takes sign(0.1) plus lambda*x separately; both move down but by different amounts.
  ParamBlock a = scalar_block(1.0), b = scalar_block(1.0);
  SignState sa, sb;
  signum_step(a, std::vector<double>{0.1}, sa, {0.1, 0.5, 0.0}, {0.0, SignumVariant::basic, 0.0, true});
  signum_step(b, std::vector<double>{0.1}, sb, {0.1, 0.5, 0.0}, {0.0, SignumVariant::basic, 0.0, false});
  EXPECT_NEAR(a.values[0], 0.9, 1e-16);
  EXPECT_NEAR(b.values[0], 1.0 - 0.1 * (1.0 + 0.5), 1e-16);
}

// ---- Newton-Schulz and Muon -----------------------------------------------

TEST(NewtonSchulz, TableCoefficients) {
  const NsCoeffs c;
  EXPECT_EQ(c.a, 3.4445);
  EXPECT_EQ(c.b, -4.7750);
  EXPECT_EQ(c.c, 2.0315);
  EXPECT_EQ(kDefaultNsIters, 5);
}

TEST(NewtonSchulz, OneStepOnIdentity) {
  const Matrix w = newton_schulz_orthogonalize(Matrix::identity(2), 1);
  // (a + b/2 + c/4) / sqrt(2), evaluated separately.
  EXPECT_NEAR(w(0, 0), 1.1065337242092983, 1e-15);
  EXPECT_NEAR(w(1, 1), 1.1065337242092983, 1e-15);
  EXPECT_EQ(w(0, 1), 0.0);
}

TEST(NewtonSchulz, OrthogonalInputStaysParallel) {
  Rng rng(6);
  const Matrix q = qr_orthonormal(Matrix(5, 5, rng_normal(rng, 25)));
  const Matrix w = newton_schulz_orthogonalize(q);
  const double s = w(0, 0) / q(0, 0);
  for (std::size_t i = 0; i < 25; ++i) EXPECT_NEAR(w.data()[i], s * q.data()[i], 1e-12);
}

TEST(NewtonSchulz, TallAndWideAgreeUnderTranspose) {
  Rng rng(7);
  const Matrix g(6, 3, rng_normal(rng, 18));
  const Matrix a = newton_schulz_orthogonalize(g);
  const Matrix b = newton_schulz_orthogonalize(g.transposed()).transposed();
  EXPECT_EQ(a, b);
}

TEST(NewtonSchulz, RejectsZeroAndBadIters) {
  EXPECT_THROW(newton_schulz_orthogonalize(Matrix(3, 3)), ContractViolation);
  EXPECT_THROW(newton_schulz_orthogonalize(Matrix::identity(3), 0), ContractViolation);
}

TEST(NewtonSchulz, FrozenBand) {
  const auto r = verify::newton_schulz_range(50, 64, 17);
  EXPECT_GE(r.min_sv, verify::kNsBand.min_sv);
  EXPECT_LE(r.max_sv, verify::kNsBand.max_sv);
}

TEST(Muon, VectorBlockIsAdamW) {
  ParamBlock a = random_block("b", {5}, Role::vector, 8);
  ParamBlock b = a;
  MuonState s;
  AdamLikeState sa;
  const MuonHyper hyper{0.01, 0.95, {0.003, 0.1, 1e-8}, {0.8, 0.999}};
  for (int t = 0; t < 10; ++t) {
    const auto g = random_vector(5, 200 + t);
    muon_step(a, g, s, hyper);
    adamw_step(b, g, sa, hyper.adam, hyper.adam_betas);
  }
  EXPECT_EQ(a.values, b.values);
}

TEST(Muon, MatrixIgnoresWeightDecay) {
  ParamBlock a = random_block("w", {4, 3}, Role::matrix, 9);
  ParamBlock b = a;
  MuonState sa, sb;
  for (int t = 0; t < 10; ++t) {
    const auto g = random_vector(12, 300 + t);
    muon_step(a, g, sa, {0.01, 0.95, {0.003, 0.0, 1e-8}, {0.8, 0.999}});
    muon_step(b, g, sb, {0.01, 0.95, {0.003, 0.7, 1e-8}, {0.8, 0.999}});
  }
  EXPECT_EQ(a.values, b.values);
  const auto d = OptimizerConfig::defaults_for(OptimizerKind::muon);
  EXPECT_EQ(d.momentum, 0.95);
  EXPECT_EQ(d.matrix_lr, 0.01);
}

TEST(Muon, ZeroDirectionGivesZeroUpdate) {
  ParamBlock a = random_block("w", {3, 3}, Role::matrix, 10);
  const auto before = a.values;
  MuonState s;
  muon_step(a, std::vector<double>(9, 0.0), s, {});
  EXPECT_EQ(a.values, before);
}

TEST(Dmuon, SquareMatrixIsScaledMuon) {
  const std::size_t n = 6;
  ParamBlock a = random_block("w", {n, n}, Role::matrix, 11);
  ParamBlock b = a;
  MuonState sa, sb;
  const double gamma = 0.002;
  const double scale = 0.2 * std::sqrt(static_cast<double>(n));
  for (int t = 0; t < 5; ++t) {
    const auto g = random_vector(n * n, 400 + t);
    const Update ud = dmuon_step(a, g, sa, {gamma, 0.0, 1e-8}, {0.95, 0.2, {0.8, 0.999}});
    const Update um = muon_step(b, g, sb, {gamma * scale, 0.95, {}, {0.8, 0.999}});
    EXPECT_LE(max_abs_diff(ud, um), 1e-15);
  }
}

TEST(Dmuon, VectorBlockIsAdamW) {
  ParamBlock a = random_block("b", {5}, Role::vector, 12);
  ParamBlock b = a;
  MuonState s;
  AdamLikeState sa;
  for (int t = 0; t < 10; ++t) {
    const auto g = random_vector(5, 500 + t);
    dmuon_step(a, g, s, {0.003, 0.1, 1e-8}, {0.95, 0.2, {0.8, 0.999}});
    adamw_step(b, g, sa, {0.003, 0.1, 1e-8}, {0.8, 0.999});
  }
  EXPECT_EQ(a.values, b.values);
}

// ---- SOAP -----------------------------------------------------------------

TEST(Soap, VectorBlockIsAdamW) {
  ParamBlock a = random_block("b", {7}, Role::vector, 13);
  ParamBlock b = a;
  SoapState s;
  AdamLikeState sa;
  for (int t = 0; t < 10; ++t) {
    const auto g = random_vector(7, 600 + t);
    soap_step(a, g, s, {0.01, 0.1, 1e-8}, {});
    adamw_step(b, g, sa, {0.01, 0.1, 1e-8}, {0.9, 0.999});
  }
  EXPECT_EQ(a.values, b.values);
}

TEST(Soap, OversizedMatrixFallsBackToAdamW) {
  ParamBlock a = random_block("w", {4, 5}, Role::matrix, 14);
  ParamBlock b = a;
  SoapState s;
  AdamLikeState sa;
  SoapHyper hyper;
  hyper.max_precond_dim = 4;
  for (int t = 0; t < 10; ++t) {
    const auto g = random_vector(20, 700 + t);
    soap_step(a, g, s, {0.01, 0.0, 1e-8}, hyper);
    adamw_step(b, g, sa, {0.01, 0.0, 1e-8}, {0.9, 0.999});
  }
  EXPECT_EQ(a.values, b.values);
}

TEST(Soap, FrozenIdentityBasisIsAdamW) {
  EXPECT_LE(verify::soap_identity_deviation(100, 11), 1e-12);
  EXPECT_EQ(OptimizerConfig::defaults_for(OptimizerKind::soap).precond_freq, 10);
  EXPECT_EQ(OptimizerConfig::defaults_for(OptimizerKind::soap).max_precond_dim, 10000u);
}

TEST(Soap, RectangularBlockKeepsTwoBases) {
  ParamBlock a = random_block("w", {3, 5}, Role::matrix, 15);
  SoapState s;
  for (int t = 0; t < 12; ++t) soap_step(a, random_vector(15, 800 + t), s, {0.01, 0.0, 1e-8}, {});
  EXPECT_EQ(s.q_l.rows(), 3u);
  EXPECT_EQ(s.q_r.rows(), 5u);
  EXPECT_LE(max_abs_diff(matmul(s.q_l.transposed(), s.q_l).data(), Matrix::identity(3).data()), 1e-12);
  EXPECT_LE(max_abs_diff(matmul(s.q_r.transposed(), s.q_r).data(), Matrix::identity(5).data()), 1e-12);
}

// ---- Sophia ---------------------------------------------------------------

TEST(Sophia, ZeroCurvatureIsPureSignStep) {
  ParamBlock b = scalar_block(1.0);
  SophiaState s;
  const SophiaHyper hyper{{0.9, 0.999}, 0.04, 10};
  sophia_step(b, std::vector<double>{2.0}, s, {0.1, 0.5, 1e-15}, hyper, std::vector<double>{0.0}, 4);
  EXPECT_EQ(s.h[0], 0.0);
  EXPECT_NEAR(b.values[0], 1.0 - 0.1 * (1.0 + 0.5 * 1.0), 1e-16);
}

TEST(Sophia, LargeCurvatureIsAdamLike) {
  ParamBlock b = scalar_block(0.0);
  SophiaState s;
  const SophiaHyper hyper{{0.9, 0.999}, 0.04, 10};
  const double eps = 1e-15;
  sophia_step(b, std::vector<double>{1e-3}, s, {0.1, 0.0, eps}, hyper, std::vector<double>{10.0}, 1);
  ASSERT_GT(0.04 * s.h[0], std::abs(s.m[0]));
  EXPECT_NEAR(b.values[0], -0.1 * s.m[0] / (0.04 * s.h[0] + eps), 1e-18);
  EXPECT_GE(s.h[0], 0.0);
}

TEST(Sophia, RefreshCadenceAndDefaults) {
  SophiaState s;
  const SophiaHyper hyper{{0.9, 0.999}, 0.04, 10};
  EXPECT_TRUE(sophia_refreshes_next(s, hyper));
  s.t = 1;
  EXPECT_FALSE(sophia_refreshes_next(s, hyper));
  s.t = 10;
  EXPECT_TRUE(sophia_refreshes_next(s, hyper));
  const auto d = OptimizerConfig::defaults_for(OptimizerKind::sophia);
  EXPECT_EQ(d.rho, 0.04);
  EXPECT_EQ(d.estimator_freq, 10);
}

// ---- SF-AdamW -------------------------------------------------------------

TEST(ScheduleFree, FirstStepAverageEqualsZ) {
  ParamBlock b = random_block("w", {4}, Role::vector, 16);
  ScheduleFreeState s;
  sfadamw_gradient_point(b, s, {});
  sfadamw_step(b, random_vector(4, 17), s, {0.1, 0.0, 1e-8}, {});
  EXPECT_EQ(b.values, s.z);
}

TEST(ScheduleFree, AverageIsConvexCombinationOfZ) {
  const std::vector<double> gammas{0.1, 0.3, 0.05, 0.2, 0.15};
  const double b2 = 0.999;
  ParamBlock b = random_block("w", {3}, Role::vector, 18);
  ScheduleFreeState s;
  const ScheduleFreeHyper hyper{{0.9, b2}, 0};
  std::vector<std::vector<double>> zs;
  for (std::size_t t = 0; t < gammas.size(); ++t) {
    sfadamw_gradient_point(b, s, hyper);
    sfadamw_step(b, random_vector(3, 900 + t), s, {gammas[t], 0.0, 1e-8}, hyper);
    zs.push_back(s.z);
  }
  // Expand x_5 = sum_i w_i z_i with c_i = g_i^2 / sum_{j<=i} g_j^2, g_i = gamma_i sqrt(1 - b2^i).
  std::vector<double> c;
  double sum = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const double g = gammas[i] * std::sqrt(1.0 - std::pow(b2, static_cast<double>(i + 1)));
    sum += g * g;
    c.push_back(g * g / sum);
  }
  std::vector<double> w(gammas.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = c[i];
    for (std::size_t j = i + 1; j < w.size(); ++j) w[i] *= 1.0 - c[j];
    EXPECT_GE(w[i], 0.0);
  }
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);
  for (std::size_t k = 0; k < 3; ++k) {
    double x = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) x += w[i] * zs[i][k];
    EXPECT_NEAR(b.values[k], x, 1e-14);
  }
}

TEST(ScheduleFree, StepWithoutGradientPointThrows) {
  ParamBlock b = scalar_block(0.0);
  ScheduleFreeState s;
  EXPECT_THROW(sfadamw_step(b, std::vector<double>{1.0}, s, {}, {}), ContractViolation);
}

// ---- Prodigy --------------------------------------------------------------

TEST(Prodigy, FirstStepKeepsD) {
  std::vector<ParamBlock> blocks{random_block("w", {5}, Role::vector, 19)};
  ProdigyState s;
  const Gradients g{random_vector(5, 20)};
  const ProdigyReport r = prodigy_step(blocks, g, s, {1.0, 0.0, 1e-8}, {});
  EXPECT_EQ(r.d_used, 1e-6);
  EXPECT_EQ(r.d_next, 1e-6);
}

TEST(Prodigy, DNeverDecreases) {
  std::vector<ParamBlock> blocks{random_block("w", {4, 3}, Role::matrix, 21), random_block("b", {4}, Role::vector, 22)};
  ProdigyState s;
  double prev = 1e-6;
  for (int t = 0; t < 200; ++t) {
    // Gradient of 0.5 ||x - 1||^2 plus noise.
    Gradients g;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      auto noise = random_vector(blocks[k].size(), 1000 + 7 * t + k);
      for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = blocks[k].values[i] - 1.0 + 0.3 * noise[i];
      g.push_back(noise);
    }
    const ProdigyReport r = prodigy_step(blocks, g, s, {1.0, 0.0, 1e-8}, {});
    ASSERT_GE(r.d_next, prev);
    prev = r.d_next;
  }
  EXPECT_GT(prev, 1e-6);
}

// ---- MARS -----------------------------------------------------------------

TEST(Mars, RepeatedGradientHasNoCorrection) {
  ParamBlock b = random_block("w", {2, 2}, Role::matrix, 23);
  MarsState s;
  MarsHyper hyper;
  const std::vector<double> g{0.01, -0.02, 0.03, 0.005};
  mars_step(b, g, s, hyper);
  const std::vector<double> m1 = s.m;
  mars_step(b, g, s, hyper);
  const double b1 = hyper.matrix_betas.beta1;
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s.m[i], b1 * m1[i] + (1.0 - b1) * g[i], 1e-18);
}

TEST(Mars, CorrectedGradientClippedToUnitNorm) {
  ParamBlock b = random_block("w", {2, 2}, Role::matrix, 24);
  MarsState s;
  MarsHyper hyper;
  const double b1 = hyper.matrix_betas.beta1;
  const double k = 1.0 + hyper.eta * b1 / (1.0 - b1);
  // First step has g_prev = 0, so c = k g; pick g with ||c|| = 2.
  const std::vector<double> u{0.6, 0.0, -0.8, 0.0};
  std::vector<double> g(4);
  for (std::size_t i = 0; i < 4; ++i) g[i] = 2.0 * u[i] / k;
  mars_step(b, g, s, hyper);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s.m[i], (1.0 - b1) * u[i], 1e-15);
}

TEST(Mars, DefaultsAndVectorRouting) {
  const auto d = OptimizerConfig::defaults_for(OptimizerKind::mars_adamw);
  EXPECT_EQ(d.eta, 0.025);
  EXPECT_EQ(d.beta1, 0.95);
  EXPECT_EQ(d.beta2, 0.99);
  ParamBlock a = random_block("b", {3}, Role::vector, 25);
  ParamBlock c = a;
  MarsState s;
  AdamLikeState sa;
  MarsHyper hyper;
  for (int t = 0; t < 5; ++t) {
    const auto g = random_vector(3, 1100 + t);
    mars_step(a, g, s, hyper);
    adamw_step(c, g, sa, hyper.adam, hyper.adam_betas);
  }
  EXPECT_EQ(a.values, c.values);
}

// ---- Optimizer front end --------------------------------------------------

TEST(OptimizerFrontEnd, NamesRoundTrip) {
  EXPECT_EQ(all_optimizer_kinds().size(), 14u);
  for (const auto k : all_optimizer_kinds()) EXPECT_EQ(parse_optimizer_kind(to_string(k)), k);
  try {
    parse_optimizer_kind("adam");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("mars-shampoo"), std::string::npos);
  }
  EXPECT_TRUE(is_sign_based(OptimizerKind::lion));
  EXPECT_TRUE(is_sign_based(OptimizerKind::signum));
  EXPECT_FALSE(is_sign_based(OptimizerKind::adamw));
}

TEST(OptimizerFrontEnd, ValidationRejectsBadValues) {
  auto c = OptimizerConfig::defaults_for(OptimizerKind::adamw);
  c.lr = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = OptimizerConfig::defaults_for(OptimizerKind::adamw);
  c.beta2 = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(OptimizerFrontEnd, AdoptAndSophiaPreconditions) {
  std::vector<ParamBlock> blocks{random_block("w", {3}, Role::vector, 26)};
  Optimizer adopt(OptimizerConfig::defaults_for(OptimizerKind::adopt), 1);
  EXPECT_TRUE(adopt.needs_initial_gradient());
  EXPECT_THROW(adopt.step(blocks, {random_vector(3, 1)}, {}), ContractViolation);
  Optimizer sophia(OptimizerConfig::defaults_for(OptimizerKind::sophia), 1);
  EXPECT_TRUE(sophia.needs_curvature());
  EXPECT_THROW(sophia.step(blocks, {random_vector(3, 1)}, {}), ContractViolation);
}

// ---- oracle equivalence ---------------------------------------------------

class OracleEquivalence : public ::testing::TestWithParam<OptimizerKind> {};

TEST_P(OracleEquivalence, MatchesPlainLoopReference) {
  EXPECT_LE(verify::reference_deviation(GetParam(), 200, 7), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(AllRules, OracleEquivalence, ::testing::ValuesIn(all_optimizer_kinds().begin(), all_optimizer_kinds().end()),
                         [](const auto& info) {
                           std::string s(to_string(info.param));
                           for (char& ch : s)
                             if (ch == '-') ch = '_';
                           return s;
                         });

TEST(OracleEquivalence, SoapWithIndependentEigensolverAgreesClosely) {
  verify::Options o;
  o.independent_linalg = true;
  // Different eigensolvers disagree in the rounding-noise directions of the
  // first basis; the trajectories still agree far below any optimisation scale.
  EXPECT_LE(verify::reference_deviation(OptimizerKind::soap, 200, 7, o), 1e-8);
}

TEST(OracleEquivalence, InjectedEpsilonIsCaught) {
  verify::Options o;
  o.inject = "adamw-eps";
  EXPECT_GT(verify::reference_deviation(OptimizerKind::adamw, 200, 7, o), 1e-6);
  o.inject = "nope";
  EXPECT_THROW(verify::reference_deviation(OptimizerKind::adamw, 10, 7, o), ConfigError);
}

TEST(SignScale, TrajectoriesAreScaleFree) {
  for (const auto k : {OptimizerKind::signum, OptimizerKind::lion}) {
    for (const double c : {0.1, 7.3}) EXPECT_TRUE(verify::sign_scale_invariant(k, c, 200, 13)) << to_string(k) << c;
  }
}

// ---- reference primitives against the library ----------------------------

TEST(ReferencePrimitives, JacobiMatchesLibraryEigenbasis) {
  Rng rng(27);
  const Matrix b(6, 6, rng_normal(rng, 36));
  const Matrix a = matmul(b, b.transposed());
  const auto ref = reference::jacobi_eigenvectors(reference::to_mat(a.data(), 6, 6));
  const Matrix lib = sym_eigenbasis(a);
  EXPECT_LE(max_abs_diff(reference::to_flat(ref), lib.data()), 1e-10);
}

TEST(ReferencePrimitives, GramSchmidtMatchesLibraryQr) {
  Rng rng(28);
  const Matrix a(5, 5, rng_normal(rng, 25));
  const auto ref = reference::gram_schmidt_q(reference::to_mat(a.data(), 5, 5));
  EXPECT_LE(max_abs_diff(reference::to_flat(ref), qr_orthonormal(a).data()), 1e-12);
}

TEST(ReferencePrimitives, NewtonSchulzAndMatmulMatch) {
  Rng rng(29);
  const Matrix g(4, 7, rng_normal(rng, 28));
  const NsCoeffs c;
  const auto ref = reference::newton_schulz(reference::to_mat(g.data(), 4, 7), 5, c.a, c.b, c.c);
  EXPECT_LE(max_abs_diff(reference::to_flat(ref), newton_schulz_orthogonalize(g).data()), 1e-12);
  const Matrix h(7, 3, rng_normal(rng, 21));
  const auto p = reference::matmul(reference::to_mat(g.data(), 4, 7), reference::to_mat(h.data(), 7, 3));
  EXPECT_LE(max_abs_diff(reference::to_flat(p), matmul(g, h).data()), 1e-13);
}
