// optlab: command-line front end for runs, sweeps, benchmarks, verification
// and plot-data extraction.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "optlab/bench.hpp"
#include "optlab/config.hpp"
#include "optlab/error.hpp"
#include "optlab/harness.hpp"
#include "optlab/plotdata.hpp"
#include "optlab/presets.hpp"
#include "optlab/verify.hpp"

namespace fs = std::filesystem;
using namespace optlab;

namespace {

constexpr int kExitConfig = 2;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("OPTLAB_OUT"); env != nullptr && *env != '\0') return env;
  return "optlab-out";
}

struct ConfigInputs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  std::vector<ConfigEntry> entries() const {
    std::vector<ConfigEntry> out;
    if (!config_path.empty()) out = parse_config_any(read_file(config_path), config_path);
    for (const auto& s : sets) out.push_back(parse_override(s));
    if (seed) out.push_back({"run.seed", std::to_string(*seed), "--seed", 0});
    return out;
  }

  std::vector<std::string> overrides() const {
    std::vector<std::string> out = sets;
    if (seed) out.push_back("run.seed=" + std::to_string(*seed));
    return out;
  }
};

void add_config_options(CLI::App* cmd, ConfigInputs& in) {
  cmd->add_option("--config", in.config_path, "Config file (key = value text, or a JSON run summary)");
  cmd->add_option("--set", in.sets, "Override KEY=VALUE (repeatable, applied after the file)");
  cmd->add_option("--seed", in.seed, "Run seed (same as --set run.seed=N)");
}

fs::path write_run(const fs::path& dir, const RunRecord& record, const std::vector<std::string>& overrides) {
  write_file(dir / "record.csv", to_csv(record));
  write_file(dir / "summary.json", to_json_summary(record, overrides));
  return dir;
}

int cmd_run(const ConfigInputs& in, const std::string& out_flag) {
  const RunConfig config = resolve_config(in.entries());
  const RunRecord record = run(config);
  const fs::path dir = output_root(out_flag) / ("run-" + hex(config_hash(config)) + "-s" + std::to_string(config.seed));
  write_run(dir, record, in.overrides());
  const auto& s = record.summary;
  std::printf("%s on %s: %lld steps, final loss %s%s\n", std::string(to_string(config.optimizer.kind)).c_str(),
              std::string(to_string(config.problem.kind)).c_str(), static_cast<long long>(s.steps_completed),
              format_double(s.final_loss).c_str(), s.diverged ? " (diverged)" : "");
  if (s.diverged) {
    std::fprintf(stderr, "warning: diverged at step %lld: %s\n", static_cast<long long>(*s.divergence_step),
                 s.divergence_reason.c_str());
  }
  std::printf("%s\n", dir.string().c_str());
  return 0;
}

Grid parse_grid(const std::vector<std::string>& specs) {
  Grid grid;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("--grid: expected KEY=V1,V2,..., got '" + spec + "'");
    std::vector<std::string> values;
    std::stringstream ss(spec.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) {
      if (!v.empty()) values.push_back(v);
    }
    grid.emplace_back(spec.substr(0, eq), values);
  }
  return grid;
}

int cmd_sweep(const ConfigInputs& in, const std::vector<std::string>& grid_specs, int jobs,
              const std::string& out_flag) {
  const RunConfig base = resolve_config(in.entries());
  const Grid grid = parse_grid(grid_specs);
  const auto results = sweep(base, grid, jobs);
  const fs::path dir = output_root(out_flag) / ("sweep-" + hex(config_hash(base)));

  std::string table = "index,assignment,final_loss,diverged\n";
  std::size_t best = results.size();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::string assignment;
    for (const auto& [k, v] : r.assignment) assignment += (assignment.empty() ? "" : ";") + k + "=" + v;
    table += std::to_string(i) + "," + assignment + "," + format_double(r.record.summary.final_loss) + "," +
             (r.record.summary.diverged ? "true" : "false") + "\n";
    write_run(dir / ("run-" + std::to_string(i)), r.record, {});
    std::printf("%-40s final loss %-24s%s\n", assignment.empty() ? "(base)" : assignment.c_str(),
                format_double(r.record.summary.final_loss).c_str(), r.record.summary.diverged ? " diverged" : "");
    const bool better = best == results.size() ||
                        (!r.record.summary.diverged &&
                         (results[best].record.summary.diverged ||
                          r.record.summary.final_loss < results[best].record.summary.final_loss));
    if (better) best = i;
  }
  write_file(dir / "sweep.csv", table);
  if (best < results.size() && !results[best].record.summary.diverged) {
    std::string assignment;
    for (const auto& [k, v] : results[best].assignment) assignment += (assignment.empty() ? "" : " ") + k + "=" + v;
    std::printf("best: %s (final loss %s)\n", assignment.empty() ? "(base)" : assignment.c_str(),
                format_double(results[best].record.summary.final_loss).c_str());
  } else {
    std::printf("best: none (every run diverged)\n");
  }
  std::printf("%s\n", dir.string().c_str());
  return 0;
}

int cmd_bench(const std::string& suite_path, std::optional<std::uint64_t> seed, int jobs, const std::string& out_flag) {
  const std::string text = read_file(suite_path);
  BenchSuite suite = parse_bench_suite(text, suite_path);
  if (seed) suite.suite_seed = *seed;
  const BenchResult result = run_bench(suite, jobs);

  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text + "#" + std::to_string(suite.suite_seed)) h = (h ^ c) * 0x100000001b3ULL;
  const fs::path dir = output_root(out_flag) / ("bench-" + hex(h));
  for (const auto& r : result.runs) {
    write_run(dir / "runs" / (r.optimizer + "-T" + std::to_string(r.budget) + "-r" + std::to_string(r.replicate)),
              r.record, {});
  }
  const std::string report = format_report(result.table);
  write_file(dir / "report.txt", report);
  write_file(dir / "report.csv", report_csv(result.table));
  write_file(dir / "report.json", report_json(result.table));
  std::printf("%s%s\n", report.c_str(), dir.string().c_str());
  return 0;
}

int cmd_verify(const std::optional<std::string>& inject, const std::string& filter) {
  verify::Options opts;
  if (inject) {
    const auto known = verify::known_injections();
    if (std::find(known.begin(), known.end(), *inject) == known.end()) {
      throw ConfigError("unknown injection '" + *inject + "' (valid: adamw-eps)");
    }
    opts.inject = inject;
    std::printf("fault injected: %s\n", inject->c_str());
  }
  std::vector<verify::CheckResult> results;
  for (const auto& check : verify::checks()) {
    if (!filter.empty() && check.name.find(filter) == std::string::npos) continue;
    results.push_back(check.run(opts));
    const auto& r = results.back();
    std::printf("%-28s %s  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
  }
  int failed = 0;
  for (const auto& r : results) {
    if (!r.passed) {
      ++failed;
      std::fprintf(stderr, "failed invariant: %s\n", r.name.c_str());
    }
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}

int cmd_plotdata(const std::string& run_dir, const std::string& kind, int window, const std::string& out_path) {
  fs::path csv = run_dir;
  if (fs::is_directory(csv)) csv /= "record.csv";
  const PlotSeries series = extract_series(read_file(csv), kind, window);
  if (series.empty_column) {
    std::fprintf(stderr, "warning: column %s in %s holds no values; output is empty\n", series.column.c_str(),
                 csv.string().c_str());
  }
  const std::string text = series_csv(series);
  if (out_path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_file(out_path, text);
  }
  return 0;
}

int cmd_presets(const std::string& name) {
  if (!name.empty()) {
    const Preset* p = find_preset(name);
    if (p == nullptr) throw ConfigError("unknown preset '" + name + "'");
    std::printf("[%s]\n# %s\n", p->name.c_str(), p->description.c_str());
    for (const auto& e : p->entries) std::printf("%s = %s\n", e.key.c_str(), e.value.c_str());
    return 0;
  }
  for (const auto& p : builtin_presets()) std::printf("%-26s %s\n", p.name.c_str(), p.description.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optlab: optimizer benchmarking at desk scale"};
  app.require_subcommand(1);
  std::string out_flag;
  int jobs = 1;

  ConfigInputs run_in;
  auto* run_cmd = app.add_subcommand("run", "Run one configuration and write record.csv + summary.json");
  add_config_options(run_cmd, run_in);
  run_cmd->add_option("--out", out_flag, "Output root (default $OPTLAB_OUT or ./optlab-out)");

  ConfigInputs sweep_in;
  std::vector<std::string> grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "Cartesian grid of runs over a base configuration");
  add_config_options(sweep_cmd, sweep_in);
  sweep_cmd->add_option("--grid", grid, "KEY=V1,V2,... (repeatable)");
  sweep_cmd->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", out_flag, "Output root");

  std::string suite_path;
  std::optional<std::uint64_t> bench_seed;
  auto* bench_cmd = app.add_subcommand("bench", "Rank optimizers over budgets and seeds");
  bench_cmd->add_option("suite", suite_path, "Suite file")->required();
  bench_cmd->add_option("--seed", bench_seed, "Suite seed (overrides suite.seed)");
  bench_cmd->add_option("--jobs", jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", out_flag, "Output root");

  std::optional<std::string> inject;
  std::string filter;
  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle and invariant checks");
  verify_cmd->add_option("--inject", inject, "Fault to inject (adamw-eps)");
  verify_cmd->add_option("--filter", filter, "Only checks whose name contains this text");

  std::string plot_dir, plot_kind, plot_out;
  int window = 1;
  auto* plot_cmd = app.add_subcommand("plotdata", "Extract a step,value series from a run");
  plot_cmd->add_option("run", plot_dir, "Run directory or record.csv")->required();
  plot_cmd->add_option("--kind", plot_kind, "loss, gradnorm, lr, normgrowth, update, effective_lr, d")->required();
  plot_cmd->add_option("--window", window, "EMA window (1 = raw)")->check(CLI::PositiveNumber);
  plot_cmd->add_option("--out", plot_out, "Output file (default stdout)");

  std::string preset_name;
  auto* presets_cmd = app.add_subcommand("presets", "List presets, or print one");
  presets_cmd->add_option("name", preset_name, "Preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run_in, out_flag);
    if (*sweep_cmd) return cmd_sweep(sweep_in, grid, jobs, out_flag);
    if (*bench_cmd) return cmd_bench(suite_path, bench_seed, jobs, out_flag);
    if (*verify_cmd) return cmd_verify(inject, filter);
    if (*plot_cmd) return cmd_plotdata(plot_dir, plot_kind, window, plot_out);
    if (*presets_cmd) return cmd_presets(preset_name);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
