#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace optlab {

/// Plot kinds and the RunRecord column each one reads:
///   loss -> loss, gradnorm -> grad_norm, lr -> lr, normgrowth -> param_norm,
///   update -> update_norm, effective_lr -> effective_lr, d -> d_t.
std::vector<std::string> plot_kinds();
/// Column name for a kind. Throws ConfigError for unknown kinds.
std::string plot_column(std::string_view kind);

struct PlotSeries {
  std::string column;
  std::vector<std::int64_t> steps;
  std::vector<double> values;
  /// True when the column exists but holds no values (d_t outside Prodigy).
  bool empty_column = false;
};

/// Pulls one column out of a RunRecord CSV and applies an EMA with
/// alpha = 2 / (window + 1). Window 1 returns the raw values.
PlotSeries extract_series(std::string_view csv, std::string_view kind, int window = 1);

/// Two-column "step,value" CSV.
std::string series_csv(const PlotSeries& series);

}  // namespace optlab
