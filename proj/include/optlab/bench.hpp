#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "optlab/config.hpp"
#include "optlab/harness.hpp"

namespace optlab {

/// A benchmark suite: optimizers x budgets x replicates over one base config.
///
/// Text format (same line grammar as run configs):
///   suite.optimizers = adamw, signum
///   suite.budgets = 100, 300, 1000
///   suite.seeds = 3          # replicates per cell
///   suite.seed = 1
///   opt.signum.lr = 0.003    # per-optimizer override
///   problem.noise = 4        # anything else is the shared base config
struct BenchSuite {
  std::vector<ConfigEntry> base;
  std::vector<std::string> optimizers;
  std::vector<std::int64_t> budgets;
  int seeds = 3;
  std::uint64_t suite_seed = 1;
  std::vector<std::pair<std::string, ConfigEntry>> overrides;  // optimizer -> entry
};

BenchSuite parse_bench_suite(std::string_view text, std::string_view source);

/// hash(suite seed, optimizer, budget, replicate).
std::uint64_t cell_seed(std::uint64_t suite_seed, std::string_view optimizer, std::int64_t budget, int replicate);

/// Fully resolved config of one cell. Replicate r of every optimizer shares the
/// same problem instance unless the base pins problem.seed.
RunConfig cell_config(const BenchSuite& suite, std::string_view optimizer, std::int64_t budget, int replicate);

struct BenchCell {
  std::string optimizer;
  std::int64_t budget = 0;
  std::vector<double> final_losses;
  double mean_final_loss = 0.0;
  int diverged_runs = 0;
  int rank = 0;  // 1 is best within the budget column
};

struct ReportTable {
  std::string problem;
  int seed_count = 0;
  std::vector<std::string> optimizers;
  std::vector<std::int64_t> budgets;
  std::vector<BenchCell> cells;  // optimizer-major

  const BenchCell& cell(std::string_view optimizer, std::int64_t budget) const;
};

struct BenchRun {
  std::string optimizer;
  std::int64_t budget = 0;
  int replicate = 0;
  RunRecord record;
};

struct BenchResult {
  ReportTable table;
  std::vector<BenchRun> runs;
};

/// Runs every cell (concurrently with jobs > 1) and ranks by mean final loss
/// per budget. A cell with any diverged replicate ranks after all others.
BenchResult run_bench(const BenchSuite& suite, int jobs = 1);

/// Assigns ranks in place; exposed for testing.
void rank_cells(ReportTable& table);

std::string format_report(const ReportTable& table);
std::string report_csv(const ReportTable& table);
std::string report_json(const ReportTable& table);

}  // namespace optlab
