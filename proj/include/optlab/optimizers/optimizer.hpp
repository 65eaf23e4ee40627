#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "optlab/optimizers/adam_family.hpp"
#include "optlab/optimizers/common.hpp"
#include "optlab/optimizers/mars.hpp"
#include "optlab/optimizers/muon.hpp"
#include "optlab/optimizers/newton_schulz.hpp"
#include "optlab/optimizers/param_block.hpp"
#include "optlab/optimizers/prodigy.hpp"
#include "optlab/optimizers/schedule_free.hpp"
#include "optlab/optimizers/sign_methods.hpp"
#include "optlab/optimizers/soap.hpp"
#include "optlab/optimizers/sophia.hpp"

namespace optlab {

enum class OptimizerKind {
  adamw,
  adopt,
  ademamix,
  lion,
  signum,
  muon,
  dmuon,
  soap,
  sophia,
  sfadamw,
  prodigy,
  mars_adamw,
  mars_lion,
  mars_shampoo,
};

std::span<const OptimizerKind> all_optimizer_kinds();
std::string_view to_string(OptimizerKind k);
/// Throws ConfigError listing every valid name.
OptimizerKind parse_optimizer_kind(std::string_view name);
bool is_sign_based(OptimizerKind k);

/// Every tunable of every rule. Fields that a rule does not read are ignored.
struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adamw;
  double lr = 1e-3;            // peak rate; the AdamW group's rate for muon and mars
  double matrix_lr = 0.01;     // gamma^M for muon and mars matrix blocks
  double weight_decay = 0.0;
  double matrix_weight_decay = 0.0;  // mars matrix blocks
  double epsilon = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_beta1 = 0.8;     // AdamW group of the hybrid methods
  double adam_beta2 = 0.999;
  double beta3 = 0.9999;       // ademamix
  double beta_start = 0.9;     // ademamix beta3 schedule start
  double alpha = 8.0;          // ademamix
  std::int64_t ema_horizon = 0;  // T_alpha = T_beta3; 0 means the run length
  double momentum = 0.95;      // signum, muon, d-muon
  SignumVariant signum_variant = SignumVariant::nesterov;
  double dampening = 0.0;
  bool coupled_weight_decay = false;
  int ns_iters = kDefaultNsIters;
  NsCoeffs ns_coeffs;
  double rms_scale = 0.2;      // d-muon
  std::int64_t precond_freq = 10;
  std::size_t max_precond_dim = 10000;
  bool identity_init = false;
  bool bias_correction = true;  // soap, prodigy
  double rho = 0.04;
  std::int64_t estimator_freq = 10;
  std::int64_t sf_warmup_steps = 0;
  double d0 = 1e-6;
  double eta = 0.025;

  /// Per-rule defaults taken from the tuned settings.
  static OptimizerConfig defaults_for(OptimizerKind kind);
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct StepInputs {
  /// Scheduled rate of the main group; config.lr * lr_factor when unset.
  std::optional<double> lr;
  /// Schedule multiplier for the secondary rates (matrix_lr).
  double lr_factor = 1.0;
  /// Sophia: gradient against self-sampled labels, required when needs_curvature().
  const Gradients* curvature = nullptr;
  std::size_t batch_size = 1;
  /// Run length, used for the ademamix schedules when ema_horizon is 0.
  std::int64_t total_steps = 1;
};

struct StepReport {
  double update_norm = 0.0;
  double lr = 0.0;            // scheduled peak-group rate
  double effective_lr = 0.0;  // gamma_t * d_t for prodigy, else lr
  std::optional<double> d;    // prodigy d_{t+1}
};

/// One rule applied to a list of parameter blocks, with per-block state and
/// role routing for the hybrid methods.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t block_count);

  const OptimizerConfig& config() const noexcept { return config_; }
  OptimizerKind kind() const noexcept { return config_.kind; }
  std::int64_t steps_taken() const noexcept { return steps_; }

  /// ADOPT consumes one gradient before its first step.
  bool needs_initial_gradient() const;
  void observe_initial_gradient(const Gradients& grads);

  /// SF-AdamW: gradients must be taken at the point returned by gradient_point.
  bool uses_gradient_point() const noexcept { return config_.kind == OptimizerKind::sfadamw; }
  BlockValues gradient_point(std::span<const ParamBlock> blocks);

  /// Sophia: whether the next step refreshes its curvature estimate.
  bool needs_curvature() const;

  StepReport step(std::span<ParamBlock> blocks, const Gradients& grads, const StepInputs& in);

 private:
  Update step_block(std::size_t b, ParamBlock& block, const std::vector<double>& grad,
                    const StepInputs& in, double factor);

  OptimizerConfig config_;
  std::int64_t steps_ = 0;
  std::vector<AdamLikeState> adam_;
  std::vector<AdoptState> adopt_;
  std::vector<AdemamixState> ademamix_;
  std::vector<SignState> sign_;
  std::vector<MuonState> muon_;
  std::vector<SoapState> soap_;
  std::vector<SophiaState> sophia_;
  std::vector<ScheduleFreeState> sf_;
  std::vector<MarsState> mars_;
  ProdigyState prodigy_;
};

}  // namespace optlab
