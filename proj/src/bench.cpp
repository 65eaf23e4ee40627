#include "optlab/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "optlab/error.hpp"
#include "optlab/numerics/rng.hpp"

namespace optlab {

namespace {

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    cur.clear();
  };
  for (char c : s) {
    if (c == ',') {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::int64_t to_int(const ConfigEntry& e, std::string_view item) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(std::string(item), &used);
    if (used != item.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(e.source + ":" + std::to_string(e.line) + ": " + e.key + ": expected an integer, got '" +
                      std::string(item) + "'");
  }
}

}  // namespace

BenchSuite parse_bench_suite(std::string_view text, std::string_view source) {
  BenchSuite suite;
  for (auto& e : parse_assignments(text, source)) {
    const std::string at = e.source + ":" + std::to_string(e.line) + ": ";
    if (e.key == "suite.optimizers") {
      suite.optimizers = split_list(e.value);
      for (const auto& name : suite.optimizers) {
        try {
          parse_optimizer_kind(name);
        } catch (const ConfigError& err) {
          throw ConfigError(at + err.what());
        }
      }
    } else if (e.key == "suite.budgets") {
      suite.budgets.clear();
      for (const auto& item : split_list(e.value)) {
        const std::int64_t b = to_int(e, item);
        if (b < 1) throw ConfigError(at + "budgets must be >= 1, got '" + item + "'");
        suite.budgets.push_back(b);
      }
    } else if (e.key == "suite.seeds") {
      suite.seeds = static_cast<int>(to_int(e, e.value));
    } else if (e.key == "suite.seed") {
      suite.suite_seed = static_cast<std::uint64_t>(to_int(e, e.value));
    } else if (e.key.rfind("opt.", 0) == 0) {
      const auto dot = e.key.find('.', 4);
      if (dot == std::string::npos) throw ConfigError(at + "expected opt.<optimizer>.<key>");
      std::string name = e.key.substr(4, dot - 4);
      ConfigEntry inner = e;
      inner.key = e.key.substr(dot + 1);
      if (!is_known_config_key(inner.key)) throw ConfigError(at + "unknown key '" + inner.key + "'");
      suite.overrides.emplace_back(std::move(name), std::move(inner));
    } else if (e.key.rfind("suite.", 0) == 0) {
      throw ConfigError(at + "unknown suite key '" + e.key + "'");
    } else {
      if (!is_known_config_key(e.key)) throw ConfigError(at + "unknown key '" + e.key + "'");
      const std::string k = canonical_key(e.key);
      if (k == "optimizer.name" || k == "run.steps" || k == "run.seed" || k == "preset") {
        throw ConfigError(at + "'" + e.key + "' is set per cell; use suite.* or opt.<name>.*");
      }
      suite.base.push_back(std::move(e));
    }
  }
  if (suite.optimizers.empty()) throw ConfigError(std::string(source) + ": suite.optimizers is required");
  if (suite.budgets.empty()) throw ConfigError(std::string(source) + ": suite.budgets is required");
  if (suite.seeds < 1) throw ConfigError(std::string(source) + ": suite.seeds must be >= 1");
  for (const auto& [name, entry] : suite.overrides) {
    if (std::find(suite.optimizers.begin(), suite.optimizers.end(), name) == suite.optimizers.end()) {
      throw ConfigError(entry.source + ":" + std::to_string(entry.line) + ": override for '" + name +
                        "', which is not in suite.optimizers");
    }
  }
  std::sort(suite.budgets.begin(), suite.budgets.end());
  suite.budgets.erase(std::unique(suite.budgets.begin(), suite.budgets.end()), suite.budgets.end());
  return suite;
}

std::uint64_t cell_seed(std::uint64_t suite_seed, std::string_view optimizer, std::int64_t budget, int replicate) {
  std::uint64_t h = hash_combine(suite_seed, fnv1a(optimizer));
  h = hash_combine(h, static_cast<std::uint64_t>(budget));
  return hash_combine(h, static_cast<std::uint64_t>(replicate));
}

RunConfig cell_config(const BenchSuite& suite, std::string_view optimizer, std::int64_t budget, int replicate) {
  std::vector<ConfigEntry> entries = suite.base;
  entries.push_back({"optimizer.name", std::string(optimizer), "<suite>", 0});
  for (const auto& [name, entry] : suite.overrides) {
    if (name == optimizer) entries.push_back(entry);
  }
  entries.push_back({"run.steps", std::to_string(budget), "<suite>", 0});
  entries.push_back({"run.seed", std::to_string(cell_seed(suite.suite_seed, optimizer, budget, replicate)), "<suite>", 0});
  RunConfig config = resolve_config(entries);
  if (config.problem.seed == 0) {
    config.problem.seed = hash_combine(suite.suite_seed, 0x5eed0000ULL + static_cast<std::uint64_t>(replicate));
  }
  return config;
}

const BenchCell& ReportTable::cell(std::string_view optimizer, std::int64_t budget) const {
  for (const auto& c : cells) {
    if (c.optimizer == optimizer && c.budget == budget) return c;
  }
  throw ContractViolation("report: no cell for " + std::string(optimizer) + " at T=" + std::to_string(budget));
}

void rank_cells(ReportTable& table) {
  for (const auto budget : table.budgets) {
    std::vector<BenchCell*> column;
    for (auto& c : table.cells) {
      if (c.budget == budget) column.push_back(&c);
    }
    std::stable_sort(column.begin(), column.end(), [](const BenchCell* a, const BenchCell* b) {
      const bool da = a->diverged_runs > 0, db = b->diverged_runs > 0;
      if (da != db) return db;
      if (da) return false;
      return a->mean_final_loss < b->mean_final_loss;
    });
    for (std::size_t i = 0; i < column.size(); ++i) column[i]->rank = static_cast<int>(i + 1);
  }
}

BenchResult run_bench(const BenchSuite& suite, int jobs) {
  BenchResult result;
  // Resolve every cell first so configuration errors surface before any run.
  for (const auto& name : suite.optimizers) {
    for (const auto budget : suite.budgets) {
      for (int r = 0; r < suite.seeds; ++r) {
        result.runs.push_back({name, budget, r, RunRecord{cell_config(suite, name, budget, r), {}, {}}});
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) {
      try {
        result.runs[i].record = run(result.runs[i].record.config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(result.runs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ReportTable& table = result.table;
  table.problem = std::string(to_string(result.runs.front().record.config.problem.kind));
  table.seed_count = suite.seeds;
  table.optimizers = suite.optimizers;
  table.budgets = suite.budgets;
  for (const auto& name : suite.optimizers) {
    for (const auto budget : suite.budgets) {
      BenchCell cell{name, budget, {}, 0.0, 0, 0};
      for (const auto& br : result.runs) {
        if (br.optimizer != name || br.budget != budget) continue;
        cell.final_losses.push_back(br.record.summary.final_loss);
        if (br.record.summary.diverged) ++cell.diverged_runs;
      }
      cell.mean_final_loss = cell.diverged_runs > 0
                                 ? std::numeric_limits<double>::infinity()
                                 : std::accumulate(cell.final_losses.begin(), cell.final_losses.end(), 0.0) /
                                       static_cast<double>(cell.final_losses.size());
      table.cells.push_back(std::move(cell));
    }
  }
  rank_cells(table);
  return result;
}

std::string format_report(const ReportTable& table) {
  std::ostringstream out;
  out << "problem: " << table.problem << ", seeds per cell: " << table.seed_count << "\n";
  std::size_t width = 9;
  for (const auto& o : table.optimizers) width = std::max(width, o.size());
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(width), "optimizer");
  out << buf;
  for (const auto b : table.budgets) {
    std::snprintf(buf, sizeof buf, " | %20s", ("T=" + std::to_string(b) + " loss (rank)").c_str());
    out << buf;
  }
  out << "\n";
  for (const auto& o : table.optimizers) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(width), o.c_str());
    out << buf;
    for (const auto b : table.budgets) {
      const BenchCell& c = table.cell(o, b);
      if (c.diverged_runs > 0) {
        std::snprintf(buf, sizeof buf, " | %12s (%d) !%d", "diverged", c.rank, c.diverged_runs);
      } else {
        std::snprintf(buf, sizeof buf, " | %15.6e (%2d)", c.mean_final_loss, c.rank);
      }
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string report_csv(const ReportTable& table) {
  std::string out = "optimizer,budget,mean_final_loss,rank,diverged_runs,seeds\n";
  for (const auto& c : table.cells) {
    out += c.optimizer + "," + std::to_string(c.budget) + "," + format_double(c.mean_final_loss) + "," +
           std::to_string(c.rank) + "," + std::to_string(c.diverged_runs) + "," +
           std::to_string(c.final_losses.size()) + "\n";
  }
  return out;
}

std::string report_json(const ReportTable& table) {
  nlohmann::ordered_json doc;
  doc["problem"] = table.problem;
  doc["seed_count"] = table.seed_count;
  doc["budgets"] = table.budgets;
  doc["optimizers"] = table.optimizers;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : table.cells) {
    nlohmann::ordered_json j;
    j["optimizer"] = c.optimizer;
    j["budget"] = c.budget;
    j["mean_final_loss"] = std::isfinite(c.mean_final_loss) ? nlohmann::ordered_json(c.mean_final_loss)
                                                            : nlohmann::ordered_json(format_double(c.mean_final_loss));
    auto losses = nlohmann::ordered_json::array();
    for (double v : c.final_losses) {
      losses.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_double(v)));
    }
    j["final_losses"] = losses;
    j["diverged_runs"] = c.diverged_runs;
    j["rank"] = c.rank;
    cells.push_back(j);
  }
  doc["cells"] = cells;
  return doc.dump(2) + "\n";
}

}  // namespace optlab
