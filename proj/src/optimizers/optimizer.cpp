#include "optlab/optimizers/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

namespace {

constexpr std::array kAllKinds{
    OptimizerKind::adamw,  OptimizerKind::adopt,      OptimizerKind::ademamix,  OptimizerKind::lion,
    OptimizerKind::signum, OptimizerKind::muon,       OptimizerKind::dmuon,     OptimizerKind::soap,
    OptimizerKind::sophia, OptimizerKind::sfadamw,    OptimizerKind::prodigy,   OptimizerKind::mars_adamw,
    OptimizerKind::mars_lion, OptimizerKind::mars_shampoo,
};

std::string valid_names() {
  std::string out;
  for (auto k : kAllKinds) {
    if (!out.empty()) out += ", ";
    out += to_string(k);
  }
  return out;
}

MarsVariant mars_variant_of(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::mars_lion: return MarsVariant::lion;
    case OptimizerKind::mars_shampoo: return MarsVariant::shampoo;
    default: return MarsVariant::adamw;
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("optimizer: " + what);
}

bool in_unit_interval(double b) { return b >= 0.0 && b < 1.0; }

}  // namespace

std::span<const OptimizerKind> all_optimizer_kinds() { return kAllKinds; }

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::adamw: return "adamw";
    case OptimizerKind::adopt: return "adopt";
    case OptimizerKind::ademamix: return "ademamix";
    case OptimizerKind::lion: return "lion";
    case OptimizerKind::signum: return "signum";
    case OptimizerKind::muon: return "muon";
    case OptimizerKind::dmuon: return "d-muon";
    case OptimizerKind::soap: return "soap";
    case OptimizerKind::sophia: return "sophia";
    case OptimizerKind::sfadamw: return "sf-adamw";
    case OptimizerKind::prodigy: return "prodigy";
    case OptimizerKind::mars_adamw: return "mars-adamw";
    case OptimizerKind::mars_lion: return "mars-lion";
    case OptimizerKind::mars_shampoo: return "mars-shampoo";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  for (auto k : kAllKinds) {
    if (to_string(k) == name) return k;
  }
  if (name == "mars") return OptimizerKind::mars_adamw;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (valid: " + valid_names() + ")");
}

bool is_sign_based(OptimizerKind k) { return k == OptimizerKind::lion || k == OptimizerKind::signum; }

OptimizerConfig OptimizerConfig::defaults_for(OptimizerKind kind) {
  OptimizerConfig c;
  c.kind = kind;
  switch (kind) {
    case OptimizerKind::adamw:
    case OptimizerKind::ademamix:
      break;
    case OptimizerKind::adopt:
      c.epsilon = 1e-6;
      break;
    case OptimizerKind::lion:
      c.lr = 1e-4;
      c.beta2 = 0.99;
      break;
    case OptimizerKind::signum:
      break;
    case OptimizerKind::muon:
      c.matrix_lr = 0.01;
      break;
    case OptimizerKind::dmuon:
      break;
    case OptimizerKind::soap:
      break;
    case OptimizerKind::sophia:
      c.lr = 3e-4;
      c.epsilon = 1e-15;
      break;
    case OptimizerKind::sfadamw:
      c.beta2 = 0.9999;
      break;
    case OptimizerKind::prodigy:
      c.lr = 1.0;
      break;
    case OptimizerKind::mars_adamw:
    case OptimizerKind::mars_shampoo:
      c.matrix_lr = 0.003;
      c.beta1 = 0.95;
      c.beta2 = 0.99;
      break;
    case OptimizerKind::mars_lion:
      c.lr = 1e-4;
      c.matrix_lr = 1e-4;
      c.beta1 = 0.95;
      c.beta2 = 0.99;
      break;
  }
  return c;
}

void OptimizerConfig::validate() const {
  require(std::isfinite(lr) && lr >= 0.0, "lr must be finite and >= 0");
  require(std::isfinite(matrix_lr) && matrix_lr >= 0.0, "matrix_lr must be finite and >= 0");
  require(weight_decay >= 0.0 && matrix_weight_decay >= 0.0, "weight decay must be >= 0");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(in_unit_interval(beta1) && in_unit_interval(beta2), "beta1 and beta2 must lie in [0, 1)");
  require(in_unit_interval(adam_beta1) && in_unit_interval(adam_beta2), "adam_beta1/2 must lie in [0, 1)");
  require(in_unit_interval(momentum), "momentum must lie in [0, 1)");
  require(ns_iters >= 1, "ns_iters must be >= 1");
  require(precond_freq >= 0 && estimator_freq >= 1, "precond_freq >= 0 and estimator_freq >= 1 required");
  require(rho > 0.0, "rho must be > 0");
  require(d0 > 0.0, "d0 must be > 0");
  require(sf_warmup_steps >= 0 && ema_horizon >= 0, "step counts must be >= 0");
  if (kind == OptimizerKind::ademamix) {
    require(beta3 > 0.0 && beta3 < 1.0 && beta_start > 0.0 && beta_start < 1.0,
            "beta3 and beta_start must lie in (0, 1)");
    require(alpha >= 0.0, "alpha must be >= 0");
  }
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t block_count) : config_(config) {
  config_.validate();
  const auto k = config_.kind;
  switch (k) {
    case OptimizerKind::adamw: adam_.resize(block_count); break;
    case OptimizerKind::adopt: adopt_.resize(block_count); break;
    case OptimizerKind::ademamix: ademamix_.resize(block_count); break;
    case OptimizerKind::lion:
    case OptimizerKind::signum: sign_.resize(block_count); break;
    case OptimizerKind::muon:
    case OptimizerKind::dmuon:
      muon_.resize(block_count);
      for (auto& s : muon_) {
        s.ns_iters = config_.ns_iters;
        s.ns_coeffs = config_.ns_coeffs;
      }
      break;
    case OptimizerKind::soap: soap_.resize(block_count); break;
    case OptimizerKind::sophia: sophia_.resize(block_count); break;
    case OptimizerKind::sfadamw: sf_.resize(block_count); break;
    case OptimizerKind::prodigy: break;
    case OptimizerKind::mars_adamw:
    case OptimizerKind::mars_lion:
    case OptimizerKind::mars_shampoo: mars_.resize(block_count); break;
  }
}

bool Optimizer::needs_initial_gradient() const {
  if (config_.kind != OptimizerKind::adopt) return false;
  for (const auto& s : adopt_) {
    if (!s.initialized) return true;
  }
  return false;
}

void Optimizer::observe_initial_gradient(const Gradients& grads) {
  if (config_.kind != OptimizerKind::adopt) return;
  if (grads.size() != adopt_.size()) throw ContractViolation("optimizer: one gradient per block required");
  for (std::size_t b = 0; b < grads.size(); ++b) adopt_initialize(adopt_.at(b), grads[b]);
}

BlockValues Optimizer::gradient_point(std::span<const ParamBlock> blocks) {
  if (!uses_gradient_point()) return values_of(blocks);
  if (blocks.size() != sf_.size()) throw ContractViolation("optimizer: block count changed");
  const ScheduleFreeHyper sf{{config_.beta1, config_.beta2}, config_.sf_warmup_steps};
  BlockValues out(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto y = sfadamw_gradient_point(blocks[b], sf_.at(b), sf);
    out[b].assign(y.begin(), y.end());
  }
  return out;
}

bool Optimizer::needs_curvature() const {
  if (config_.kind != OptimizerKind::sophia || sophia_.empty()) return false;
  const SophiaHyper hyper{{config_.beta1, config_.beta2}, config_.rho, config_.estimator_freq};
  return sophia_refreshes_next(sophia_.front(), hyper);
}

Update Optimizer::step_block(std::size_t b, ParamBlock& block, const std::vector<double>& grad,
                             const StepInputs& in, double factor) {
  const auto& c = config_;
  const CommonHyper main{in.lr.value_or(c.lr * factor), c.weight_decay, c.epsilon};
  const AdamBetas betas{c.beta1, c.beta2};
  const AdamBetas adam_betas{c.adam_beta1, c.adam_beta2};
  switch (c.kind) {
    case OptimizerKind::adamw:
      return adamw_step(block, grad, adam_.at(b), main, betas);
    case OptimizerKind::adopt:
      return adopt_step(block, grad, adopt_.at(b), main, betas);
    case OptimizerKind::ademamix: {
      const std::int64_t horizon = c.ema_horizon > 0 ? c.ema_horizon : std::max<std::int64_t>(in.total_steps, 1);
      const EmaScheduleSpec ema{c.alpha, c.beta3, c.beta_start, horizon, horizon};
      return ademamix_step(block, grad, ademamix_.at(b), main, betas, ema);
    }
    case OptimizerKind::lion:
      return lion_step(block, grad, sign_.at(b), main, betas);
    case OptimizerKind::signum: {
      const SignumHyper signum{c.momentum, c.signum_variant, c.dampening, c.coupled_weight_decay};
      return signum_step(block, grad, sign_.at(b), main, signum);
    }
    case OptimizerKind::muon: {
      const MuonHyper hyper{c.matrix_lr * factor, c.momentum, main, adam_betas};
      return muon_step(block, grad, muon_.at(b), hyper);
    }
    case OptimizerKind::dmuon: {
      const DmuonHyper hyper{c.momentum, c.rms_scale, adam_betas};
      return dmuon_step(block, grad, muon_.at(b), main, hyper);
    }
    case OptimizerKind::soap: {
      const SoapHyper hyper{betas, c.precond_freq, c.max_precond_dim, c.bias_correction, c.identity_init};
      return soap_step(block, grad, soap_.at(b), main, hyper);
    }
    case OptimizerKind::sophia: {
      const SophiaHyper hyper{betas, c.rho, c.estimator_freq};
      std::span<const double> curv;
      if (in.curvature != nullptr) curv = (*in.curvature).at(b);
      return sophia_step(block, grad, sophia_.at(b), main, hyper, curv, in.batch_size);
    }
    case OptimizerKind::sfadamw: {
      const ScheduleFreeHyper hyper{betas, c.sf_warmup_steps};
      return sfadamw_step(block, grad, sf_.at(b), main, hyper);
    }
    case OptimizerKind::mars_adamw:
    case OptimizerKind::mars_lion:
    case OptimizerKind::mars_shampoo: {
      MarsHyper hyper;
      hyper.variant = mars_variant_of(c.kind);
      hyper.eta = c.eta;
      hyper.matrix = {c.matrix_lr * factor, c.matrix_weight_decay, c.epsilon};
      hyper.matrix_betas = betas;
      hyper.adam = main;
      hyper.adam_betas = adam_betas;
      hyper.ns_iters = c.ns_iters;
      hyper.ns_coeffs = c.ns_coeffs;
      return mars_step(block, grad, mars_.at(b), hyper);
    }
    case OptimizerKind::prodigy:
      break;
  }
  throw ContractViolation("optimizer: prodigy is stepped over all blocks at once");
}

StepReport Optimizer::step(std::span<ParamBlock> blocks, const Gradients& grads, const StepInputs& in) {
  if (blocks.size() != grads.size()) throw ContractViolation("optimizer: one gradient per block required");
  if (needs_initial_gradient()) throw ContractViolation("adopt: step before v0 initialisation");
  if (needs_curvature() && in.curvature == nullptr) {
    throw ContractViolation("sophia: refresh step requires a resampled gradient");
  }
  const double factor = in.lr_factor;
  StepReport report;
  report.lr = in.lr.value_or(config_.lr * factor);
  report.effective_lr = report.lr;

  double sq = 0.0;
  if (config_.kind == OptimizerKind::prodigy) {
    const CommonHyper hyper{report.lr, config_.weight_decay, config_.epsilon};
    const ProdigyHyper prodigy{{config_.beta1, config_.beta2}, config_.bias_correction, config_.d0};
    const ProdigyReport pr = prodigy_step(blocks, grads, prodigy_, hyper, prodigy);
    for (const auto& u : pr.updates) sq += kernels::sum_squares(u);
    report.effective_lr = pr.effective_lr;
    report.d = pr.d_next;
  } else {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Update u = step_block(b, blocks[b], grads[b], in, factor);
      sq += kernels::sum_squares(u);
    }
  }
  report.update_norm = std::sqrt(sq);
  ++steps_;
  return report;
}

}  // namespace optlab
