#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "optlab/optimizers/optimizer.hpp"
#include "optlab/problems.hpp"
#include "optlab/schedules.hpp"

namespace optlab {

enum class ProblemKind { quadratic, rosenbrock, mlp };

std::string_view to_string(ProblemKind k);
ProblemKind parse_problem_kind(std::string_view name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  // quadratic / rosenbrock
  std::size_t dim = 20;
  double condition = 10.0;
  double noise = 0.0;
  std::size_t matrix_rows = 0;
  // mlp
  std::size_t in_dim = 8;
  std::size_t hidden = 16;
  std::size_t classes = 4;
  std::size_t samples = 256;
  double separation = 2.0;
  double output_init = 0.01;
  // shared
  std::size_t batch_size = 1;
  /// Seed for the problem instance (data, matrix, init). 0 uses the run seed.
  std::uint64_t seed = 0;
};

std::unique_ptr<Problem> make_problem(const ProblemSpec& spec, std::uint64_t run_seed);

struct RunConfig {
  ProblemSpec problem;
  OptimizerConfig optimizer;
  /// Shape of the schedule; gamma_max is taken from optimizer.lr and
  /// total_steps from `steps`.
  ScheduleSpec schedule;
  std::int64_t steps = 100;
  std::optional<double> clip_threshold;
  std::uint64_t seed = 1;
  std::int64_t log_every = 1;
  /// Signum only: fold weight decay into the gradient (coupled L2).
  bool coupled_wd_demo = false;
  /// Record per-step optimizer wall time in the CSV (breaks byte equality).
  bool timing = false;

  /// Schedule with gamma_max and total_steps filled in.
  ScheduleSpec resolved_schedule() const;
  /// Optimizer config with the run-level switches applied.
  OptimizerConfig resolved_optimizer() const;
  /// Throws ConfigError when the configuration cannot run.
  void validate() const;
};

struct RunRow {
  std::int64_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // before clipping
  double update_norm = 0.0;
  double param_norm = 0.0;
  double lr = 0.0;
  double effective_lr = 0.0;
  std::optional<double> d;
  std::int64_t step_time_ns = 0;
};

struct RunSummary {
  double final_loss = 0.0;
  double initial_loss = 0.0;
  double final_param_norm = 0.0;
  double mean_step_time_ns = 0.0;  // 0 unless timing is on
  std::int64_t steps_completed = 0;
  bool diverged = false;
  std::optional<std::int64_t> divergence_step;
  std::string divergence_reason;
};

struct RunRecord {
  RunConfig config;
  std::vector<RunRow> rows;
  RunSummary summary;
};

inline constexpr double kDivergenceLoss = 1e6;

/// Global-norm clipping across all blocks. Returns the pre-clip norm.
/// Throws PoisonedState when the norm is not finite.
double clip_gradients(Gradients& grads, double threshold);

/// Executes one training run. Throws ConfigError for incompatible
/// optimizer/problem pairs before the first step.
RunRecord run(const RunConfig& config);

inline constexpr const char* kCsvHeader =
    "step,loss,grad_norm,update_norm,param_norm,lr,effective_lr,d_t,step_time_ns";

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string to_csv(const RunRecord& record);

struct TimingStats {
  double mean_ns = 0.0;
  double stddev_ns = 0.0;
  std::vector<double> repeat_means_ns;
};

/// Mean optimizer-step wall time over `repeats` fresh runs of `steps` steps,
/// each seeded differently; gradient evaluation is outside the timed region.
TimingStats time_optimizer(const OptimizerConfig& optimizer, const Problem& problem, std::int64_t steps,
                           int repeats = 5, std::uint64_t seed = 1);

using Grid = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct SweepResult {
  std::vector<std::pair<std::string, std::string>> assignment;
  RunRecord record;
};

/// Cartesian product of the grid applied on top of `base`. Run i is seeded
/// with hash(base.seed, i); an empty grid gives the single base run. When
/// base.problem.seed is 0 all runs share the instance drawn from base.seed.
/// Throws ConfigError for unknown keys before any run starts.
std::vector<SweepResult> sweep(const RunConfig& base, const Grid& grid, int jobs = 1);

}  // namespace optlab
