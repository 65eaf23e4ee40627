#include "optlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "optlab/config.hpp"
#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"
#include "optlab/numerics/rng.hpp"

namespace optlab {

std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::quadratic: return "quadratic";
    case ProblemKind::rosenbrock: return "rosenbrock";
    case ProblemKind::mlp: return "mlp";
  }
  return "?";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "quadratic") return ProblemKind::quadratic;
  if (name == "rosenbrock") return ProblemKind::rosenbrock;
  if (name == "mlp") return ProblemKind::mlp;
  throw ConfigError("unknown problem '" + std::string(name) + "' (valid: quadratic, rosenbrock, mlp)");
}

std::unique_ptr<Problem> make_problem(const ProblemSpec& spec, std::uint64_t run_seed) {
  Rng rng(spec.seed != 0 ? spec.seed : run_seed, /*stream=*/0x70726f62);
  switch (spec.kind) {
    case ProblemKind::quadratic: {
      QuadraticOptions options;
      options.batch = {spec.batch_size, spec.noise};
      options.matrix_rows = spec.matrix_rows;
      return quadratic_problem(spec.dim, spec.condition, rng, options);
    }
    case ProblemKind::rosenbrock:
      return rosenbrock_problem(spec.dim);
    case ProblemKind::mlp: {
      MlpOptions options;
      options.batch_size = spec.batch_size;
      options.cluster_separation = spec.separation;
      options.output_init_scale = spec.output_init;
      return mlp_classification_problem(spec.in_dim, spec.hidden, spec.classes, spec.samples, rng, options);
    }
  }
  throw ConfigError("unknown problem kind");
}

ScheduleSpec RunConfig::resolved_schedule() const {
  ScheduleSpec s = schedule;
  s.gamma_max = optimizer.lr;
  s.total_steps = steps;
  return s;
}

OptimizerConfig RunConfig::resolved_optimizer() const {
  OptimizerConfig o = optimizer;
  if (coupled_wd_demo) o.coupled_weight_decay = true;
  return o;
}

void RunConfig::validate() const {
  if (steps < 1) throw ConfigError("run.steps must be >= 1");
  if (log_every < 1) throw ConfigError("run.log_every must be >= 1");
  if (clip_threshold && !(*clip_threshold > 0.0)) throw ConfigError("run.clip must be > 0 or none");
  if (coupled_wd_demo && optimizer.kind != OptimizerKind::signum) {
    throw ConfigError("run.coupled_wd_demo only applies to signum");
  }
  resolved_optimizer().validate();
  ScheduleSpec s = resolved_schedule();
  if (s.gamma_max == 0.0) s.gamma_max = 1.0;  // a zero rate is legal, the shape still has to be
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

double clip_gradients(Gradients& grads, double threshold) {
  if (!(threshold > 0.0)) throw ContractViolation("clip_gradients: threshold must be > 0");
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw PoisonedState("clip_gradients: non-finite gradient norm");
  if (norm > threshold) {
    const double scale = threshold / norm;
    for (auto& g : grads) {
      for (double& v : g) v *= scale;
    }
  }
  return norm;
}

namespace {

using Clock = std::chrono::steady_clock;

void mark_diverged(RunSummary& s, std::int64_t step, std::string reason) {
  s.diverged = true;
  s.divergence_step = step;
  s.divergence_reason = std::move(reason);
}

void check_compatible(const RunConfig& config, const Problem& problem) {
  if (config.optimizer.kind == OptimizerKind::sophia && !problem.supports_gnb()) {
    throw ConfigError("sophia needs a problem with Gauss-Newton-Bartlett support; '" + problem.name() +
                      "' has none");
  }
}

}  // namespace

RunRecord run(const RunConfig& config) {
  config.validate();
  RunRecord record;
  record.config = config;
  auto& summary = record.summary;

  const auto problem = make_problem(config.problem, config.seed);
  check_compatible(config, *problem);
  std::vector<ParamBlock> blocks = problem->initial_blocks();
  Optimizer opt(config.resolved_optimizer(), blocks.size());
  const ScheduleSpec schedule = config.resolved_schedule();
  const double base_lr = config.optimizer.lr;

  summary.initial_loss = problem->eval_loss(values_of(blocks));

  auto prepare = [&](Gradients& grads) {
    return config.clip_threshold ? clip_gradients(grads, *config.clip_threshold) : global_norm(grads);
  };

  if (opt.needs_initial_gradient()) {
    LossGrad lg = problem->loss_and_grad(values_of(blocks), batch_seed(config.seed, 0));
    prepare(lg.grads);
    opt.observe_initial_gradient(lg.grads);
  }

  double time_total = 0.0;
  for (std::int64_t t = 1; t <= config.steps; ++t) {
    const std::uint64_t seed_t = batch_seed(config.seed, t);
    const BlockValues point = opt.gradient_point(blocks);
    LossGrad lg = problem->loss_and_grad(point, seed_t);
    if (!std::isfinite(lg.loss) || lg.loss > kDivergenceLoss) {
      mark_diverged(summary, t, "loss " + format_double(lg.loss) + " exceeds the divergence threshold");
      break;
    }
    const double grad_norm = prepare(lg.grads);
    if (!std::isfinite(grad_norm)) {
      mark_diverged(summary, t, "non-finite gradient norm");
      break;
    }
    std::optional<Gradients> curvature;
    if (opt.needs_curvature()) curvature = problem->resampled_grad(point, seed_t);

    StepInputs in;
    in.lr = lr_at(schedule, t);
    in.lr_factor = base_lr != 0.0 ? *in.lr / base_lr : 0.0;
    in.curvature = curvature ? &*curvature : nullptr;
    in.batch_size = problem->batch_size();
    in.total_steps = config.steps;

    StepReport rep;
    const auto start = Clock::now();
    try {
      rep = opt.step(blocks, lg.grads, in);
    } catch (const PoisonedState& e) {
      mark_diverged(summary, t, e.what());
      break;
    } catch (const NumericalFailure& e) {
      mark_diverged(summary, t, e.what());
      break;
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
    time_total += static_cast<double>(elapsed);
    summary.steps_completed = t;

    const double pnorm = param_norm(blocks);
    if (!std::isfinite(pnorm)) {
      mark_diverged(summary, t, "non-finite parameters");
      break;
    }
    if (t % config.log_every == 0 || t == config.steps) {
      RunRow row;
      row.step = t;
      row.loss = lg.loss;
      row.grad_norm = grad_norm;
      row.update_norm = rep.update_norm;
      row.param_norm = pnorm;
      row.lr = rep.lr;
      row.effective_lr = rep.effective_lr;
      row.d = rep.d;
      row.step_time_ns = config.timing ? static_cast<std::int64_t>(elapsed) : 0;
      record.rows.push_back(row);
    }
  }

  summary.mean_step_time_ns = config.timing && summary.steps_completed > 0 ? time_total / static_cast<double>(summary.steps_completed) : 0.0;
  summary.final_param_norm = param_norm(blocks);
  if (summary.diverged) {
    summary.final_loss = std::numeric_limits<double>::infinity();
  } else {
    summary.final_loss = problem->eval_loss(values_of(blocks));
    if (!std::isfinite(summary.final_loss) || summary.final_loss > kDivergenceLoss) {
      mark_diverged(summary, config.steps, "final loss exceeds the divergence threshold");
      summary.final_loss = std::numeric_limits<double>::infinity();
    }
  }
  return record;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const RunRecord& record) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : record.rows) {
    out += std::to_string(r.step);
    for (double v : {r.loss, r.grad_norm, r.update_norm, r.param_norm, r.lr, r.effective_lr}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    if (r.d) out += format_double(*r.d);
    out += ',';
    out += std::to_string(r.step_time_ns);
    out += '\n';
  }
  return out;
}

TimingStats time_optimizer(const OptimizerConfig& optimizer, const Problem& problem, std::int64_t steps, int repeats,
                           std::uint64_t seed) {
  if (steps < 1 || repeats < 1) throw ContractViolation("time_optimizer: steps and repeats must be >= 1");
  if (optimizer.kind == OptimizerKind::sophia && !problem.supports_gnb()) {
    throw ConfigError("sophia needs a problem with Gauss-Newton-Bartlett support");
  }
  TimingStats stats;
  for (int r = 0; r < repeats; ++r) {
    const std::uint64_t run_seed = hash_combine(seed, static_cast<std::uint64_t>(r));
    std::vector<ParamBlock> blocks = problem.initial_blocks();
    Optimizer opt(optimizer, blocks.size());
    if (opt.needs_initial_gradient()) {
      opt.observe_initial_gradient(problem.loss_and_grad(values_of(blocks), batch_seed(run_seed, 0)).grads);
    }
    double total = 0.0;
    for (std::int64_t t = 1; t <= steps; ++t) {
      const std::uint64_t seed_t = batch_seed(run_seed, t);
      const BlockValues point = opt.gradient_point(blocks);
      LossGrad lg = problem.loss_and_grad(point, seed_t);
      std::optional<Gradients> curvature;
      if (opt.needs_curvature()) curvature = problem.resampled_grad(point, seed_t);
      StepInputs in;
      in.curvature = curvature ? &*curvature : nullptr;
      in.batch_size = problem.batch_size();
      in.total_steps = steps;
      const auto start = Clock::now();
      opt.step(blocks, lg.grads, in);
      total += static_cast<double>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
    }
    stats.repeat_means_ns.push_back(total / static_cast<double>(steps));
  }
  double mean = 0.0;
  for (double m : stats.repeat_means_ns) mean += m;
  mean /= static_cast<double>(repeats);
  double var = 0.0;
  for (double m : stats.repeat_means_ns) var += (m - mean) * (m - mean);
  stats.mean_ns = mean;
  stats.stddev_ns = repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;
  return stats;
}

std::vector<SweepResult> sweep(const RunConfig& base, const Grid& grid, int jobs) {
  std::size_t total = 1;
  for (const auto& [key, values] : grid) {
    if (!is_known_config_key(key)) throw ConfigError("sweep: unknown config key '" + key + "'");
    if (values.empty()) throw ConfigError("sweep: key '" + key + "' has no values");
    total *= values.size();
  }

  std::vector<SweepResult> results(total);
  std::vector<RunConfig> configs(total, base);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      const auto& [key, values] = *it;
      const std::string& value = values[rem % values.size()];
      rem /= values.size();
      results[i].assignment.insert(results[i].assignment.begin(), {key, value});
    }
    for (const auto& [key, value] : results[i].assignment) apply_config_key(configs[i], key, value);
    configs[i].seed = hash_combine(base.seed, static_cast<std::uint64_t>(i));
    // Every grid point sees the same problem instance; only the batch stream varies.
    if (configs[i].problem.seed == 0) configs[i].problem.seed = base.seed;
    configs[i].validate();
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        results[i].record = run(configs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace optlab
