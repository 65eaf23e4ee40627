#include "optlab/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "optlab/error.hpp"

namespace optlab {

std::string_view to_string(ScheduleFamily f) {
  switch (f) {
    case ScheduleFamily::constant: return "constant";
    case ScheduleFamily::cosine: return "cosine";
    case ScheduleFamily::linear: return "linear";
    case ScheduleFamily::wsd: return "wsd";
  }
  return "?";
}

ScheduleFamily parse_schedule_family(std::string_view name) {
  if (name == "constant") return ScheduleFamily::constant;
  if (name == "cosine") return ScheduleFamily::cosine;
  if (name == "linear") return ScheduleFamily::linear;
  if (name == "wsd") return ScheduleFamily::wsd;
  throw ConfigError("unknown schedule family '" + std::string(name) +
                    "' (valid: constant, cosine, linear, wsd)");
}

double default_final_lr_factor(ScheduleFamily f) {
  return f == ScheduleFamily::linear ? 1e-3 : 1e-2;
}

void ScheduleSpec::validate() const {
  if (!(gamma_max > 0.0) || !std::isfinite(gamma_max))
    throw ContractViolation("schedule: gamma_max must be finite and > 0");
  if (!(final_lr_factor >= 0.0 && final_lr_factor <= 1.0))
    throw ContractViolation("schedule: final_lr_factor must lie in [0, 1]");
  if (total_steps < 1) throw ContractViolation("schedule: total_steps must be >= 1");
  if (warmup_steps < 0 || warmup_steps >= total_steps)
    throw ContractViolation("schedule: need 0 <= warmup_steps < total_steps");
  if (family == ScheduleFamily::wsd) {
    if (!(wsd_cooldown_fraction > 0.0 && wsd_cooldown_fraction <= 1.0))
      throw ContractViolation("schedule: wsd_cooldown_fraction must lie in (0, 1]");
    if (wsd_cooldown_fraction * static_cast<double>(total_steps) < 1.0)
      throw ContractViolation("schedule: wsd cooldown must span at least one step");
  }
}

double lr_at(const ScheduleSpec& spec, std::int64_t t) {
  if (t < 0 || t > spec.total_steps) throw ContractViolation("lr_at: step outside [0, T]");
  const double gmax = spec.gamma_max;
  const double gend = spec.gamma_end();
  const auto T = static_cast<double>(spec.total_steps);
  const auto Tw = static_cast<double>(spec.warmup_steps);
  const auto step = static_cast<double>(t);

  if (t <= spec.warmup_steps) {
    if (spec.warmup_steps == 0) return gmax;  // only reachable at t == 0
    return gmax * step / Tw;
  }

  switch (spec.family) {
    case ScheduleFamily::constant:
      return gmax;
    case ScheduleFamily::cosine: {
      const double progress = (step - Tw) / (T - Tw);
      return gend + 0.5 * (gmax - gend) * (1.0 + std::cos(std::numbers::pi * progress));
    }
    case ScheduleFamily::linear: {
      const double progress = (step - Tw) / (T - Tw);
      return gmax + (gend - gmax) * progress;
    }
    case ScheduleFamily::wsd: {
      const double cooldown_start = (1.0 - spec.wsd_cooldown_fraction) * T;
      if (step <= cooldown_start) return gmax;
      const double x = std::clamp((step - cooldown_start) / (T - cooldown_start), 0.0, 1.0);
      return gend + (gmax - gend) * (1.0 - std::sqrt(x));
    }
  }
  return gmax;
}

double ademamix_alpha_at(const EmaScheduleSpec& spec, std::int64_t t) {
  if (spec.t_alpha <= 0) return spec.alpha;
  return std::min(static_cast<double>(t) * spec.alpha / static_cast<double>(spec.t_alpha), spec.alpha);
}

double ademamix_beta3_at(const EmaScheduleSpec& spec, std::int64_t t) {
  const double b3 = spec.beta3;
  const double bs = spec.beta_start;
  if (!(b3 > 0.0 && b3 < 1.0) || !(bs > 0.0 && bs < 1.0))
    throw ContractViolation("ademamix_beta3_at: beta_start and beta3 must lie in (0, 1)");
  if (spec.t_beta3 <= 0) return b3;
  const double frac = static_cast<double>(t) / static_cast<double>(spec.t_beta3);
  const double log_b3 = std::log(b3);
  const double log_bs = std::log(bs);
  const double denom = (1.0 - frac) * log_b3 + frac * log_bs;
  return std::min(std::exp(log_bs * log_b3 / denom), b3);
}

}  // namespace optlab
