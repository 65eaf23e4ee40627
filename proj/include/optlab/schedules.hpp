#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace optlab {

enum class ScheduleFamily { constant, cosine, linear, wsd };

std::string_view to_string(ScheduleFamily f);
/// Throws ConfigError for unknown names.
ScheduleFamily parse_schedule_family(std::string_view name);

/// Default final-LR factor for a family: 0.001 for linear, 0.01 otherwise.
double default_final_lr_factor(ScheduleFamily f);

/// Learning-rate schedule: linear warmup from 0, then a decay family ending at
/// final_lr_factor * gamma_max.
struct ScheduleSpec {
  ScheduleFamily family = ScheduleFamily::cosine;
  double gamma_max = 1e-3;
  double final_lr_factor = 0.01;
  std::int64_t warmup_steps = 0;
  std::int64_t total_steps = 1;
  double wsd_cooldown_fraction = 0.2;

  double gamma_end() const { return final_lr_factor * gamma_max; }
  /// Throws ContractViolation when the invariants do not hold.
  void validate() const;
};

/// Learning rate at step t in [0, T]. With warmup, lr(0) == 0; without it
/// lr(0) == gamma_max.
double lr_at(const ScheduleSpec& spec, std::int64_t t);

/// AdEMAMix's slow-momentum schedules.
struct EmaScheduleSpec {
  double alpha = 8.0;
  double beta3 = 0.9999;
  double beta_start = 0.9;
  std::int64_t t_alpha = 1;
  std::int64_t t_beta3 = 1;
};

/// min(t * alpha / T_alpha, alpha).
double ademamix_alpha_at(const EmaScheduleSpec& spec, std::int64_t t);

/// Log-space interpolation from beta_start to beta3 over T_beta3 steps, capped at beta3.
double ademamix_beta3_at(const EmaScheduleSpec& spec, std::int64_t t);

}  // namespace optlab
