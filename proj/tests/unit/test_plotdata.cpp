#include <gtest/gtest.h>

#include "optlab/config.hpp"
#include "optlab/error.hpp"
#include "optlab/harness.hpp"
#include "optlab/plotdata.hpp"

using namespace optlab;

namespace {

RunRecord small_run(OptimizerKind k) {
  RunConfig c;
  c.optimizer = OptimizerConfig::defaults_for(k);
  c.steps = 30;
  c.schedule.warmup_steps = 5;
  return run(c);
}

}  // namespace

TEST(PlotData, WindowOneIsIdentity) {
  const RunRecord r = small_run(OptimizerKind::adamw);
  const PlotSeries s = extract_series(to_csv(r), "loss", 1);
  ASSERT_EQ(s.values.size(), r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(s.steps[i], r.rows[i].step);
    EXPECT_EQ(s.values[i], r.rows[i].loss);
  }
}

TEST(PlotData, EmaSmoothing) {
  const std::string csv = std::string(kCsvHeader) + "\n1,0,1,0,0,0,0,,0\n2,0,3,0,0,0,0,,0\n3,0,3,0,0,0,0,,0\n";
  const PlotSeries s = extract_series(csv, "gradnorm", 3);
  EXPECT_EQ(s.column, "grad_norm");
  ASSERT_EQ(s.values.size(), 3u);
  EXPECT_EQ(s.values[0], 1.0);
  EXPECT_EQ(s.values[1], 2.0);
  EXPECT_EQ(s.values[2], 2.5);
}

TEST(PlotData, LrCurveEndpoints) {
  const RunRecord r = small_run(OptimizerKind::adamw);
  const PlotSeries s = extract_series(to_csv(r), "lr");
  EXPECT_NEAR(s.values.front(), 0.2 * r.config.optimizer.lr, 1e-18);
  EXPECT_NEAR(s.values.back(), 0.01 * r.config.optimizer.lr, 1e-18);
}

TEST(PlotData, DColumn) {
  const PlotSeries none = extract_series(to_csv(small_run(OptimizerKind::adamw)), "d");
  EXPECT_TRUE(none.empty_column);
  EXPECT_TRUE(none.values.empty());
  const PlotSeries prodigy = extract_series(to_csv(small_run(OptimizerKind::prodigy)), "d");
  EXPECT_FALSE(prodigy.empty_column);
  EXPECT_EQ(prodigy.values.size(), 30u);
}

TEST(PlotData, KindsAndErrors) {
  for (const auto& k : plot_kinds()) EXPECT_NO_THROW(plot_column(k));
  EXPECT_EQ(plot_column("normgrowth"), "param_norm");
  EXPECT_THROW(plot_column("accuracy"), ConfigError);
  EXPECT_THROW(extract_series("a,b\n1,2\n", "loss"), ConfigError);
  const RunRecord r = small_run(OptimizerKind::adamw);
  EXPECT_THROW(extract_series(to_csv(r), "loss", 0), ConfigError);
}

TEST(PlotData, SeriesCsv) {
  PlotSeries s;
  s.steps = {1, 2};
  s.values = {0.5, 0.25};
  EXPECT_EQ(series_csv(s), "step,value\n1,0.5\n2,0.25\n");
}
