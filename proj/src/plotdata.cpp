#include "optlab/plotdata.hpp"

#include <charconv>
#include <limits>

#include "optlab/error.hpp"
#include "optlab/harness.hpp"

namespace optlab {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("plotdata: bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::vector<std::string> plot_kinds() { return {"loss", "gradnorm", "lr", "normgrowth", "update", "effective_lr", "d"}; }

std::string plot_column(std::string_view kind) {
  if (kind == "loss") return "loss";
  if (kind == "gradnorm") return "grad_norm";
  if (kind == "lr") return "lr";
  if (kind == "normgrowth") return "param_norm";
  if (kind == "update") return "update_norm";
  if (kind == "effective_lr") return "effective_lr";
  if (kind == "d") return "d_t";
  throw ConfigError("unknown plot kind '" + std::string(kind) +
                    "' (valid: loss, gradnorm, lr, normgrowth, update, effective_lr, d)");
}

PlotSeries extract_series(std::string_view csv, std::string_view kind, int window) {
  if (window < 1) throw ConfigError("plotdata: window must be >= 1");
  PlotSeries series;
  series.column = plot_column(kind);

  auto next_line = [&csv]() -> std::string_view {
    const auto nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  const auto header = split(next_line());
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == series.column) col = i;
  }
  if (header.empty() || header[0] != "step" || col == header.size()) {
    throw ConfigError("plotdata: input is not a run record (missing step or " + series.column + " column)");
  }

  const double alpha = 2.0 / (static_cast<double>(window) + 1.0);
  bool any = false;
  double ema = 0.0;
  while (!csv.empty()) {
    const std::string_view line = next_line();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) throw ConfigError("plotdata: ragged row '" + std::string(line) + "'");
    if (fields[col].empty()) continue;
    const double v = to_double(fields[col]);
    std::int64_t step = 0;
    std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), step);
    if (window == 1) {
      ema = v;
    } else {
      ema = any ? alpha * v + (1.0 - alpha) * ema : v;
    }
    any = true;
    series.steps.push_back(step);
    series.values.push_back(ema);
  }
  series.empty_column = !any;
  return series;
}

std::string series_csv(const PlotSeries& series) {
  std::string out = "step,value\n";
  for (std::size_t i = 0; i < series.steps.size(); ++i) {
    out += std::to_string(series.steps[i]) + "," + format_double(series.values[i]) + "\n";
  }
  return out;
}

}  // namespace optlab
