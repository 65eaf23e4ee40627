#include <gtest/gtest.h>

#include <cmath>

#include "optlab/error.hpp"
#include "optlab/schedules.hpp"

using namespace optlab;

namespace {

ScheduleSpec spec(ScheduleFamily family, std::int64_t warmup = 100, std::int64_t total = 1000) {
  ScheduleSpec s;
  s.family = family;
  s.gamma_max = 2e-3;
  s.final_lr_factor = default_final_lr_factor(family);
  s.warmup_steps = warmup;
  s.total_steps = total;
  return s;
}

}  // namespace

TEST(Schedule, DefaultFinalFactors) {
  EXPECT_EQ(default_final_lr_factor(ScheduleFamily::cosine), 0.01);
  EXPECT_EQ(default_final_lr_factor(ScheduleFamily::wsd), 0.01);
  EXPECT_EQ(default_final_lr_factor(ScheduleFamily::linear), 0.001);
}

TEST(Schedule, WarmupIsLinearFromZero) {
  for (auto fam : {ScheduleFamily::constant, ScheduleFamily::cosine, ScheduleFamily::linear, ScheduleFamily::wsd}) {
    const ScheduleSpec s = spec(fam);
    EXPECT_EQ(lr_at(s, 0), 0.0);
    EXPECT_DOUBLE_EQ(lr_at(s, 50), 1e-3);
    EXPECT_EQ(lr_at(s, 100), s.gamma_max);
  }
}

TEST(Schedule, CosineEndpointsAndMidpoint) {
  const ScheduleSpec s = spec(ScheduleFamily::cosine);
  EXPECT_NEAR(lr_at(s, 1000), 0.01 * s.gamma_max, 1e-12);
  // Decay midpoint: cos(pi/2) = 0, so exactly halfway between gamma_max and gamma_end.
  EXPECT_NEAR(lr_at(s, 550), (s.gamma_max + s.gamma_end()) / 2, 1e-15);
}

TEST(Schedule, LinearEndpoint) {
  const ScheduleSpec s = spec(ScheduleFamily::linear);
  EXPECT_NEAR(lr_at(s, 1000), 1e-3 * s.gamma_max, 1e-15);
  EXPECT_NEAR(lr_at(s, 550), (s.gamma_max + s.gamma_end()) / 2, 1e-15);
}

TEST(Schedule, WsdShape) {
  const ScheduleSpec s = spec(ScheduleFamily::wsd);
  for (std::int64_t t = 100; t <= 800; ++t) ASSERT_EQ(lr_at(s, t), s.gamma_max) << t;
  EXPECT_LT(lr_at(s, 801), s.gamma_max);
  EXPECT_NEAR(lr_at(s, 1000), s.gamma_end(), 1e-15);
}

TEST(Schedule, ConstantStaysFlat) {
  const ScheduleSpec s = spec(ScheduleFamily::constant, 0, 10);
  for (std::int64_t t = 1; t <= 10; ++t) EXPECT_EQ(lr_at(s, t), s.gamma_max);
}

TEST(Schedule, MonotoneAfterWarmup) {
  for (auto fam : {ScheduleFamily::cosine, ScheduleFamily::linear, ScheduleFamily::wsd}) {
    const ScheduleSpec s = spec(fam);
    for (std::int64_t t = 101; t <= 1000; ++t) ASSERT_LE(lr_at(s, t), lr_at(s, t - 1)) << to_string(fam) << " " << t;
  }
}

TEST(Schedule, ValidationAndRange) {
  ScheduleSpec s = spec(ScheduleFamily::cosine, 1000, 1000);
  EXPECT_THROW(s.validate(), ContractViolation);
  s = spec(ScheduleFamily::cosine);
  s.final_lr_factor = 1.5;
  EXPECT_THROW(s.validate(), ContractViolation);
  s = spec(ScheduleFamily::cosine);
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW(lr_at(s, 1001), ContractViolation);
  EXPECT_THROW(lr_at(s, -1), ContractViolation);
}

TEST(Schedule, FamilyNames) {
  EXPECT_EQ(parse_schedule_family("wsd"), ScheduleFamily::wsd);
  EXPECT_THROW(parse_schedule_family("step"), ConfigError);
}

TEST(AdemamixAlpha, RampAndSaturation) {
  EmaScheduleSpec e{8.0, 0.9999, 0.9, 128000, 128000};
  EXPECT_EQ(ademamix_alpha_at(e, 128000), 8.0);
  EXPECT_EQ(ademamix_alpha_at(e, 64000), 4.0);
  EXPECT_EQ(ademamix_alpha_at(e, 16000), 1.0);
  EXPECT_EQ(ademamix_alpha_at(e, 200000), 8.0);
}

TEST(AdemamixBeta3, Endpoints) {
  EmaScheduleSpec e{8.0, 0.9999, 0.9, 10000, 10000};
  EXPECT_EQ(ademamix_beta3_at(e, 10000), 0.9999);
  EXPECT_NEAR(ademamix_beta3_at(e, 0), 0.9, 1e-15);
  EmaScheduleSpec huge{8.0, 0.9999, 0.9, 1000000000, 1000000000};
  EXPECT_NEAR(ademamix_beta3_at(huge, 0), 0.9, 1e-15);
  EXPECT_LT(ademamix_beta3_at(huge, 1), 0.9000002);
}

TEST(AdemamixBeta3, MidpointMatchesIndependentEvaluation) {
  // exp(ln(0.9) ln(0.9999) / (0.5 ln(0.9999) + 0.5 ln(0.9))), evaluated separately in Python.
  EmaScheduleSpec e{8.0, 0.9999, 0.9, 10000, 10000};
  EXPECT_NEAR(ademamix_beta3_at(e, 5000), 0.9998001996254803, 1e-15);
}

TEST(AdemamixBeta3, MonotoneBetweenEndpoints) {
  EmaScheduleSpec e{8.0, 0.9999, 0.9, 10000, 10000};
  double prev = ademamix_beta3_at(e, 0);
  for (std::int64_t t = 1; t <= 10000; t += 7) {
    const double b = ademamix_beta3_at(e, t);
    ASSERT_GE(b, prev);
    prev = b;
  }
}
