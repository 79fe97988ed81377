#include <cmath>

#include <gtest/gtest.h>

#include "cirbo/bo_loop.hpp"
#include "cirbo/io.hpp"

namespace cirbo {
namespace {

ExperimentConfig small_config(const std::string& obj, Eigen::Index total, Eigen::Index batch, Eigen::Index m,
                              Strategy s = Strategy::cir) {
  ExperimentConfig c;
  c.objective = obj;
  c.total_budget = total;
  c.batch_size = batch;
  c.placement.strategy = s;
  c.placement.m = m;
  c.hyper_budget = 30;
  c.random_probes = 200;
  c.features = 50;
  return c;
}

void expect_same_rows(const RunRecord& a, const RunRecord& b) {
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].n, b.steps[i].n);
    EXPECT_EQ(a.steps[i].believed_best_input, b.steps[i].believed_best_input);
    EXPECT_EQ(a.steps[i].believed_best_value, b.steps[i].believed_best_value);
    EXPECT_EQ(a.steps[i].simple_regret, b.steps[i].simple_regret);
  }
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c = small_config("toy1d", 6, 2, 3);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.steps(), 2);
  c.total_budget = 7;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = small_config("nope", 6, 2, 3);
  EXPECT_THROW(c.validate(), PreconditionError);
  c = small_config("toy1d", 6, 0, 3);
  EXPECT_THROW(c.validate(), PreconditionError);
  c = small_config("toy1d", 6, 2, 0);
  EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(Run, SmokeOneDimensional) {
  const RunRecord rec = run(small_config("toy1d", 3, 1, 1), 0);
  ASSERT_TRUE(rec.ok()) << rec.error;
  ASSERT_EQ(rec.steps.size(), 3u);
  EXPECT_EQ(rec.queries.rows(), 3);
  for (std::size_t s = 0; s < rec.steps.size(); ++s) {
    EXPECT_EQ(rec.steps[s].step, static_cast<Eigen::Index>(s));
    EXPECT_EQ(rec.steps[s].n, static_cast<Eigen::Index>(s + 1));
    EXPECT_GE(rec.steps[s].simple_regret, -1e-6);
  }
}

TEST(Run, BudgetAndRegretInvariants) {
  for (Strategy s : {Strategy::cir, Strategy::cvr, Strategy::kmeans, Strategy::uniform}) {
    const ExperimentConfig c = small_config("log-goldstein-price", 40, 8, 12, s);
    const RunRecord rec = run(c, 3);
    ASSERT_TRUE(rec.ok()) << rec.error;
    EXPECT_EQ(rec.queries.rows(), c.total_budget);
    EXPECT_EQ(rec.observations.size(), c.total_budget);
    ASSERT_EQ(static_cast<Eigen::Index>(rec.steps.size()), c.steps() + 1);
    const ObjectiveSpec obj = objective(c.objective);
    for (std::size_t i = 0; i < rec.steps.size(); ++i) {
      const auto& row = rec.steps[i];
      EXPECT_EQ(row.n, static_cast<Eigen::Index>(i + 1) * c.batch_size);
      EXPECT_GE(row.simple_regret, -1e-6);
      EXPECT_DOUBLE_EQ(row.simple_regret, obj.optimum_value - evaluate(obj, row.believed_best_input));
    }
    for (Eigen::Index i = 0; i < rec.queries.rows(); ++i) EXPECT_TRUE(obj.box.contains(rec.queries.row(i).transpose()));
  }
}

TEST(Run, DeterministicInSeed) {
  const ExperimentConfig c = small_config("hartmann6", 30, 10, 12);
  const RunRecord a = run(c, 7), b = run(c, 7), other = run(c, 8);
  ASSERT_TRUE(a.ok()) << a.error;
  expect_same_rows(a, b);
  EXPECT_EQ(a.queries, b.queries);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_NE(a.queries, other.queries);
  // CSV identical once the timing columns are dropped.
  auto strip = [](const std::string& csv) {
    std::string out;
    for (const auto& r : parse_run_csv(csv)) out += std::to_string(r.n) + detail::fmt17(r.believed_best_value) + "\n";
    return out;
  };
  EXPECT_EQ(strip(run_csv(a)), strip(run_csv(b)));
}

TEST(Run, SaturatedInducingBudgetMakesStrategiesAgree) {
  // With M >= N_total every step uses all queried points, so the placement strategy is irrelevant.
  const RunRecord cir = run(small_config("toy1d", 8, 2, 20, Strategy::cir), 1);
  const RunRecord km = run(small_config("toy1d", 8, 2, 20, Strategy::kmeans), 1);
  ASSERT_TRUE(cir.ok() && km.ok());
  expect_same_rows(cir, km);
}

TEST(Run, ExactBaselineMatchesFullRankSparse) {
  const ExperimentConfig sparse = small_config("log-goldstein-price", 60, 10, 1000, Strategy::cvr);
  ExperimentConfig exact = sparse;
  exact.placement.strategy = Strategy::exact;
  const RunRecord a = run(sparse, 2), b = run(exact, 2);
  ASSERT_TRUE(a.ok() && b.ok()) << a.error << b.error;
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_NEAR(a.steps[i].believed_best_value, b.steps[i].believed_best_value, 1e-4) << "step " << i;
  }
}

TEST(Run, InvalidConfigThrowsBeforeRunning) {
  EXPECT_THROW((void)run(small_config("toy1d", 5, 2, 1), 0), PreconditionError);
}

RunRecord with_regrets(std::initializer_list<double> regrets) {
  RunRecord r;
  Eigen::Index s = 0;
  for (double v : regrets) {
    StepRecord row;
    row.step = s;
    row.n = (s + 1) * 5;
    row.simple_regret = v;
    r.steps.push_back(row);
    ++s;
  }
  return r;
}

TEST(Aggregate, FormulaValues) {
  const auto rows = aggregate({with_regrets({1.0, 0.0}), with_regrets({1.0, 2.0})});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].mean_regret, 1.0);
  EXPECT_EQ(rows[0].half_width, 0.0);
  EXPECT_EQ(rows[1].mean_regret, 1.0);
  EXPECT_NEAR(rows[1].half_width, 1.96, 1e-12);
  EXPECT_EQ(rows[1].n, 10);
}

TEST(Aggregate, Preconditions) {
  EXPECT_THROW((void)aggregate({with_regrets({1.0})}), PreconditionError);
  EXPECT_THROW((void)aggregate({with_regrets({1.0}), with_regrets({1.0, 2.0})}), PreconditionError);
  const auto same = aggregate({with_regrets({0.5, 0.25}), with_regrets({0.5, 0.25})});
  EXPECT_EQ(same[1].half_width, 0.0);
}

}  // namespace
}  // namespace cirbo
