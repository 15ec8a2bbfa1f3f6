#include "nbw/errors.hpp"
#include "nbw/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nbw;

TEST(NearestRank, Definition) {
  std::vector<double> v = {15, 20, 35, 40, 50};
  // rank = ceil(p n / 100)
  EXPECT_EQ(nearest_rank_percentile(v, 5), 15);
  EXPECT_EQ(nearest_rank_percentile(v, 30), 20);
  EXPECT_EQ(nearest_rank_percentile(v, 40), 20);
  EXPECT_EQ(nearest_rank_percentile(v, 50), 35);
  EXPECT_EQ(nearest_rank_percentile(v, 100), 50);
  EXPECT_EQ(nearest_rank_percentile(v, 0), 15);
  EXPECT_THROW(nearest_rank_percentile({}, 50), ConfigError);
}

TEST(ExperimentConfig, ValidationAndDefaults) {
  auto c = ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"causal","grid":[1000]})"));
  EXPECT_EQ(c.train.hidden.size(), 10u);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"x","grid":[1]})")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"alpha-sweep","grid":[1.0]})")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"dim-sweep","grid":[2.5]})")),
               ConfigError);
}

TEST(RunExperiment, DeterministicAndThreadIndependent) {
  auto c = ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"alpha-sweep","grid":[0.5,0.2],
    "replicates":3,"d":2,"rho":0.6,"n":60,"train":{"hidden":[4],"batch_size":30,"epochs":2}})"));
  auto a = run_experiment(c, 1);
  auto b = run_experiment(c, 3);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].key, b[i].key);
    EXPECT_EQ(a[i].trace.max_test_estimate(), b[i].trace.max_test_estimate());
    if (i > 0) EXPECT_LT(a[i - 1].key, a[i].key);
  }
  // Same replicate shares data across the grid: oracle depends only on alpha.
  EXPECT_NE(a[0].oracle, a[3].oracle);
  auto bands = aggregate_bands(a);
  ASSERT_FALSE(bands.empty());
  for (const auto& row : bands) {
    EXPECT_EQ(row.runs, 3u);
    EXPECT_LE(row.p5, row.p45);
    EXPECT_LE(row.p45, row.median);
    EXPECT_LE(row.median, row.p55);
    EXPECT_LE(row.p55, row.p95);
  }
}

TEST(RunExperiment, KmaxIsSelectedStep) {
  auto c = ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"dim-sweep","grid":[3],
    "replicates":2,"n":80,"train":{"hidden":[4],"batch_size":40,"epochs":4}})"));
  for (const auto& cell : run_experiment(c, 1)) {
    EXPECT_EQ(cell.k_max, cell.trace.selected_step);
    EXPECT_NEAR(cell.weight_mean, 1.0, 1e-12);
  }
}

TEST(RunExperiment, CausalCellRmse) {
  auto c = ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"causal","grid":[200],
    "replicates":2,"train":{"profile":"causal","hidden":[8],"batch_size":100,"epochs":2}})"));
  auto cells = run_experiment(c, 1);
  for (const auto& cell : cells) {
    EXPECT_FALSE(cell.error.has_value());
    EXPECT_GT(cell.rmse_unweighted, 0.0);
    EXPECT_GT(cell.rmse_nbw, 0.0);
  }
  auto rows = aggregate_causal(cells);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].method, "unweighted-LR");
  EXPECT_NEAR(rows[0].mean_rmse, (cells[0].rmse_unweighted + cells[1].rmse_unweighted) / 2, 1e-12);
}
