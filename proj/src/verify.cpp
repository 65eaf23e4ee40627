#include "optlab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "optlab/config.hpp"
#include "optlab/error.hpp"
#include "optlab/harness.hpp"
#include "optlab/numerics/kernels.hpp"
#include "optlab/numerics/linalg.hpp"
#include "optlab/numerics/rng.hpp"
#include "optlab/optimizers/newton_schulz.hpp"
#include "optlab/reference.hpp"
#include "optlab/schedules.hpp"

namespace optlab::verify {

namespace {

constexpr double kOracleTol = 1e-12;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::vector<ParamBlock> scenario_blocks(OptimizerKind kind, Rng& rng) {
  std::vector<ParamBlock> blocks;
  if (kind == OptimizerKind::soap) {
    // Square blocks keep both Gram matrices full rank, so the eigenbases are
    // unique and two independent eigensolvers can agree.
    blocks.push_back(make_block("w_sq5", {5, 5}, Role::matrix));
    blocks.push_back(make_block("w_sq4", {4, 4}, Role::matrix));
  } else {
    blocks.push_back(make_block("w_tall", {6, 4}, Role::matrix));
    blocks.push_back(make_block("w_wide", {3, 7}, Role::matrix));
  }
  blocks.push_back(make_block("bias", {5}, Role::vector));
  blocks.push_back(make_block("head", {3, 5}, Role::output_head));
  for (auto& b : blocks) {
    for (double& v : b.values) v = 0.5 * rng.normal();
  }
  return blocks;
}

/// Noisy separable quadratic: g = k * x + 0.3 xi with xi drawn per (step, stream).
struct Field {
  std::vector<std::vector<double>> curvature;
  std::uint64_t seed;

  Gradients at(const BlockValues& x, std::int64_t step, std::uint64_t stream) const {
    Rng rng(hash_combine(seed, static_cast<std::uint64_t>(step)), stream);
    Gradients g(x.size());
    for (std::size_t b = 0; b < x.size(); ++b) {
      g[b].resize(x[b].size());
      for (std::size_t i = 0; i < x[b].size(); ++i) g[b][i] = curvature[b][i] * x[b][i] + 0.3 * rng.normal();
    }
    return g;
  }
};

Field make_field(const std::vector<ParamBlock>& blocks, Rng& rng) {
  Field f{{}, rng.next_u64()};
  for (const auto& b : blocks) {
    std::vector<double> k(b.size());
    for (double& v : k) v = 0.5 + 1.5 * rng.uniform();
    f.curvature.push_back(std::move(k));
  }
  return f;
}

OptimizerConfig oracle_config(OptimizerKind kind) {
  OptimizerConfig c = OptimizerConfig::defaults_for(kind);
  c.weight_decay = 0.05;
  c.matrix_weight_decay = 0.05;
  return c;
}

double max_abs_diff(const std::vector<ParamBlock>& a, const std::vector<ParamBlock>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      const double d = std::abs(a[k].values[i] - b[k].values[i]);
      if (std::isnan(d)) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, d);
    }
  }
  return worst;
}

CheckResult timed(std::string name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = std::move(name);
  try {
    auto [ok, detail] = body();
    r.passed = ok;
    r.detail = std::move(detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("threw: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

std::vector<std::string> known_injections() { return {"adamw-eps"}; }

double reference_deviation(OptimizerKind kind, int steps, std::uint64_t seed, const Options& opts) {
  if (opts.inject && *opts.inject != "adamw-eps") {
    throw ConfigError("unknown injection '" + *opts.inject + "' (valid: adamw-eps)");
  }
  Rng rng(seed, static_cast<std::uint64_t>(kind) + 1);
  std::vector<ParamBlock> lib_blocks = scenario_blocks(kind, rng);
  std::vector<ParamBlock> ref_blocks = lib_blocks;
  const Field field = make_field(lib_blocks, rng);

  const OptimizerConfig cfg = oracle_config(kind);
  OptimizerConfig lib_cfg = cfg;
  if (opts.inject && kind == OptimizerKind::adamw) lib_cfg.epsilon = 1e-3;

  Optimizer lib(lib_cfg, lib_blocks.size());
  reference::Optimizer ref(cfg, ref_blocks,
                           opts.independent_linalg ? reference::Linalg::independent : reference::Linalg::shared);
  const std::size_t batch = 4;

  if (lib.needs_initial_gradient()) {
    const Gradients g0 = field.at(values_of(lib_blocks), 0, 0);
    lib.observe_initial_gradient(g0);
    ref.initial_gradient(g0);
  }

  double worst = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const double shape = 0.55 + 0.45 * std::cos(M_PI * t / steps);
    const double lr = cfg.lr * shape;

    const BlockValues lib_point = lib.gradient_point(lib_blocks);
    const BlockValues ref_point = ref.gradient_point(ref_blocks);
    const Gradients lib_g = field.at(lib_point, t, 0);
    const Gradients ref_g = field.at(ref_point, t, 0);
    const Gradients lib_h = field.at(lib_point, t, 1);
    const Gradients ref_h = field.at(ref_point, t, 1);

    StepInputs in;
    in.lr = lr;
    in.lr_factor = shape;
    in.curvature = &lib_h;
    in.batch_size = batch;
    in.total_steps = steps;
    lib.step(lib_blocks, lib_g, in);
    ref.step(ref_blocks, ref_g, lr, shape, &ref_h, batch, steps);
    worst = std::max(worst, max_abs_diff(lib_blocks, ref_blocks));
  }
  return worst;
}

double soap_identity_deviation(int steps, std::uint64_t seed) {
  Rng rng(seed, 0);
  std::vector<ParamBlock> soap_blocks = scenario_blocks(OptimizerKind::adamw, rng);
  std::vector<ParamBlock> adam_blocks = soap_blocks;
  const Field field = make_field(soap_blocks, rng);

  OptimizerConfig soap_cfg = OptimizerConfig::defaults_for(OptimizerKind::soap);
  soap_cfg.identity_init = true;
  soap_cfg.precond_freq = 0;
  soap_cfg.lr = 1e-2;
  soap_cfg.weight_decay = 0.05;
  OptimizerConfig adam_cfg = soap_cfg;
  adam_cfg.kind = OptimizerKind::adamw;

  Optimizer soap(soap_cfg, soap_blocks.size());
  Optimizer adam(adam_cfg, adam_blocks.size());
  double worst = 0.0;
  for (int t = 1; t <= steps; ++t) {
    StepInputs in;
    in.total_steps = steps;
    soap.step(soap_blocks, field.at(values_of(soap_blocks), t, 0), in);
    adam.step(adam_blocks, field.at(values_of(adam_blocks), t, 0), in);
    worst = std::max(worst, max_abs_diff(soap_blocks, adam_blocks));
  }
  return worst;
}

bool sign_scale_invariant(OptimizerKind kind, double c, int steps, std::uint64_t seed) {
  if (!is_sign_based(kind)) throw ContractViolation("sign_scale_invariant: not a sign-based rule");
  Rng rng(seed, 0);
  std::vector<ParamBlock> base = scenario_blocks(kind, rng);
  std::vector<ParamBlock> scaled = base;
  const Field field = make_field(base, rng);
  OptimizerConfig cfg = OptimizerConfig::defaults_for(kind);
  cfg.weight_decay = 0.0;
  cfg.lr = 1e-2;
  Optimizer a(cfg, base.size());
  Optimizer b(cfg, scaled.size());
  for (int t = 1; t <= steps; ++t) {
    StepInputs in;
    in.total_steps = steps;
    a.step(base, field.at(values_of(base), t, 0), in);
    Gradients g = field.at(values_of(scaled), t, 0);
    for (auto& blk : g) {
      for (double& v : blk) v *= c;
    }
    b.step(scaled, g, in);
    for (std::size_t k = 0; k < base.size(); ++k) {
      if (base[k].values != scaled[k].values) return false;
    }
  }
  return true;
}

NsRange newton_schulz_range(int count, std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 0);
  NsRange range{std::numeric_limits<double>::infinity(), 0.0};
  for (int k = 0; k < count; ++k) {
    Matrix g(n, n);
    for (double& v : g.values()) v = rng.normal();
    const Matrix w = newton_schulz_orthogonalize(g);
    for (double s : svd_singular_values(w)) {
      range.min_sv = std::min(range.min_sv, s);
      range.max_sv = std::max(range.max_sv, s);
    }
  }
  return range;
}

std::vector<FdResult> finite_difference_errors(const Problem& problem, int points, std::uint64_t seed, double h) {
  Rng rng(seed, 0);
  std::vector<FdResult> out;
  const auto& blocks = problem.initial_blocks();
  for (int p = 0; p < points; ++p) {
    BlockValues x = values_of(blocks);
    for (auto& blk : x) {
      for (double& v : blk) v += 0.5 * rng.normal();
    }
    const std::uint64_t bseed = rng.next_u64();
    const Gradients analytic = problem.loss_and_grad(x, bseed).grads;
    const Gradients numeric = finite_difference_gradient(problem, x, bseed, h);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      double diff = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < analytic[b].size(); ++i) {
        diff += (analytic[b][i] - numeric[b][i]) * (analytic[b][i] - numeric[b][i]);
        norm += analytic[b][i] * analytic[b][i];
      }
      out.push_back({problem.name(), blocks[b].name, p, std::sqrt(diff) / std::max(std::sqrt(norm), 1e-8)});
    }
  }
  return out;
}

std::vector<std::unique_ptr<Problem>> gradient_check_problems() {
  std::vector<std::unique_ptr<Problem>> out;
  Rng rng(23, 0);
  QuadraticOptions q;
  q.batch = {4, 0.5};
  out.push_back(quadratic_problem(20, 100.0, rng, q));
  out.push_back(rosenbrock_problem(6));
  MlpOptions m;
  m.batch_size = 16;
  out.push_back(mlp_classification_problem(6, 10, 4, 64, rng, m));
  return out;
}

const std::vector<Check>& checks() {
  static const std::vector<Check> registry = [] {
    std::vector<Check> list;
    for (const OptimizerKind kind : all_optimizer_kinds()) {
      const std::string name = std::string(to_string(kind));
      list.push_back({"oracle/" + name, "matches the plain-loop reference over 200 steps to 1e-12",
                      [kind, name](const Options& o) {
                        return timed("oracle/" + name, [&] {
                          const double dev = reference_deviation(kind, 200, 7, o);
                          return std::pair{dev <= kOracleTol, "max |delta| " + sci(dev)};
                        });
                      }});
    }
    list.push_back({"soap-identity", "SOAP with Q = I frozen equals AdamW over 100 steps", [](const Options&) {
                      return timed("soap-identity", [] {
                        const double dev = soap_identity_deviation();
                        return std::pair{dev <= kOracleTol, "max |delta| " + sci(dev)};
                      });
                    }});
    for (const OptimizerKind kind : {OptimizerKind::signum, OptimizerKind::lion}) {
      for (const double c : {0.1, 7.3}) {
        const std::string name = "sign-scale/" + std::string(to_string(kind)) + "/c=" + format_double(c);
        list.push_back({name, "trajectory bit-identical under gradient scaling", [kind, c, name](const Options&) {
                          return timed(name, [&] {
                            const bool ok = sign_scale_invariant(kind, c);
                            return std::pair{ok, std::string(ok ? "bit-identical" : "trajectories differ")};
                          });
                        }});
      }
    }
    list.push_back({"ns-band", "5-step Newton-Schulz singular values inside the frozen band", [](const Options&) {
                      return timed("ns-band", [] {
                        const NsRange r = newton_schulz_range();
                        const bool ok = r.min_sv >= kNsBand.min_sv && r.max_sv <= kNsBand.max_sv;
                        return std::pair{ok, "singular values in [" + sci(r.min_sv) + ", " + sci(r.max_sv) +
                                                 "], band [" + sci(kNsBand.min_sv) + ", " + sci(kNsBand.max_sv) + "]"};
                      });
                    }});
    list.push_back({"finite-difference", "analytic gradients match central differences to 1e-6", [](const Options&) {
                      return timed("finite-difference", [] {
                        double worst = 0.0;
                        std::string where;
                        for (const auto& p : gradient_check_problems()) {
                          for (const auto& r : finite_difference_errors(*p)) {
                            if (r.rel_error >= worst) {
                              worst = r.rel_error;
                              where = r.problem + "/" + r.block;
                            }
                          }
                        }
                        return std::pair{worst <= 1e-6, "worst rel. error " + sci(worst) + " (" + where + ")"};
                      });
                    }});
    list.push_back({"schedule-endpoints", "cosine end, WSD plateau, AdEMAMix beta3 endpoints", [](const Options&) {
                      return timed("schedule-endpoints", [] {
                        ScheduleSpec cos{ScheduleFamily::cosine, 1e-3, 0.01, 100, 1000, 0.2};
                        const double end_err = std::abs(lr_at(cos, 1000) - 0.01 * 1e-3);
                        ScheduleSpec wsd{ScheduleFamily::wsd, 1e-3, 0.01, 100, 1000, 0.2};
                        bool plateau = true;
                        for (std::int64_t t = 100; t <= 800; ++t) plateau = plateau && lr_at(wsd, t) == 1e-3;
                        const bool decays = lr_at(wsd, 801) < 1e-3;
                        EmaScheduleSpec ema{8.0, 0.9999, 0.9, 500, 500};
                        const double b0 = std::abs(ademamix_beta3_at(ema, 0) - 0.9);
                        const double bT = std::abs(ademamix_beta3_at(ema, 500) - 0.9999);
                        const bool ok = end_err <= 1e-12 && plateau && decays && b0 <= 1e-12 && bT <= 1e-12;
                        return std::pair{ok, "cosine end err " + sci(end_err) + ", wsd plateau " +
                                                 (plateau && decays ? "ok" : "broken") + ", beta3 errs " + sci(b0) +
                                                 "/" + sci(bT)};
                      });
                    }});
    list.push_back({"prodigy-d", "d non-decreasing and unchanged by the first step", [](const Options&) {
                      return timed("prodigy-d", [] {
                        RunConfig c;
                        c.optimizer = OptimizerConfig::defaults_for(OptimizerKind::prodigy);
                        c.schedule.family = ScheduleFamily::constant;
                        c.steps = 200;
                        const RunRecord rec = run(c);
                        bool monotone = true;
                        double prev = c.optimizer.d0;
                        for (const auto& row : rec.rows) {
                          monotone = monotone && row.d && *row.d >= prev;
                          if (row.d) prev = *row.d;
                        }
                        const bool first = !rec.rows.empty() && rec.rows[0].d && *rec.rows[0].d == c.optimizer.d0;
                        return std::pair{monotone && first, "d_1 = " + sci(rec.rows.empty() || !rec.rows[0].d ? 0.0 : *rec.rows[0].d) +
                                                                ", final d = " + sci(prev)};
                      });
                    }});
    list.push_back({"determinism", "identical configs give byte-identical CSV", [](const Options&) {
                      return timed("determinism", [] {
                        RunConfig c;
                        c.optimizer = OptimizerConfig::defaults_for(OptimizerKind::soap);
                        c.problem.kind = ProblemKind::mlp;
                        c.problem.batch_size = 8;
                        c.steps = 50;
                        const bool same = to_csv(run(c)) == to_csv(run(c));
                        return std::pair{same, std::string(same ? "identical" : "CSV differs")};
                      });
                    }});
    return list;
  }();
  return registry;
}

std::vector<CheckResult> run_checks(const Options& opts) {
  std::vector<CheckResult> out;
  for (const auto& c : checks()) out.push_back(c.run(opts));
  return out;
}

std::string format_results(const std::vector<CheckResult>& results) {
  std::size_t width = 5;
  for (const auto& r : results) width = std::max(width, r.name.size());
  std::string out;
  char buf[512];
  int failed = 0;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%-*s  %s  %7.2fs  %s\n", static_cast<int>(width), r.name.c_str(),
                  r.passed ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
    out += buf;
    if (!r.passed) ++failed;
  }
  std::snprintf(buf, sizeof buf, "%zu checks, %d failed\n", results.size(), failed);
  out += buf;
  return out;
}

}  // namespace optlab::verify
