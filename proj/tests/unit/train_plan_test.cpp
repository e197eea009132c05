// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/train_plan.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <set>
#include <tuple>

#include "nahr/error.hpp"

namespace nahr {
namespace {

TEST(Parallelism, ReferenceLayout) {
  const auto p = plan_parallelism(128, 4, 32, 4096);
  EXPECT_EQ(p.data_parallel, 32u);
  EXPECT_EQ(p.grad_accum, 4u);
  EXPECT_EQ(p.model_parallel * p.data_parallel, p.gpus);
  EXPECT_EQ(p.data_parallel * p.micro_batch * p.grad_accum, p.global_batch);
}

TEST(Parallelism, IdentitiesHoldOverASweep) {
  for (std::uint64_t gpus : {1u, 8u, 64u, 128u, 256u}) {
    for (std::uint64_t mp : {1u, 2u, 4u, 8u}) {
      if (gpus % mp) continue;
      for (std::uint64_t micro : {1u, 8u, 32u}) {
        const std::uint64_t dp = gpus / mp;
        const auto p = plan_parallelism(gpus, mp, micro, dp * micro * 3);
        EXPECT_EQ(p.grad_accum, 3u);
      }
    }
  }
}

TEST(Parallelism, RejectsImpossibleLayouts) {
  EXPECT_THROW(plan_parallelism(128, 3, 32, 4096), ValidationError);
  EXPECT_THROW(plan_parallelism(128, 4, 32, 4000), ValidationError);
  EXPECT_THROW(plan_parallelism(0, 1, 1, 1), ValidationError);
  EXPECT_THROW(plan_parallelism(8, 0, 1, 8), ValidationError);
  EXPECT_THROW(plan_parallelism(8, 1, 0, 8), ValidationError);
  try {
    plan_parallelism(128, 4, 32, 4000);
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("4000"), std::string::npos);
  }
}

TEST(Schedule, InverseSquareRoot) {
  const LrSchedule s;
  EXPECT_DOUBLE_EQ(learning_rate(s, 1), 0.005);
  EXPECT_DOUBLE_EQ(learning_rate(s, 10'000), 0.005);
  EXPECT_DOUBLE_EQ(learning_rate(s, 40'000), 0.0025);
  EXPECT_NEAR(learning_rate(s, 90'000), 0.005 / 3.0, 1e-15);
  for (std::int64_t step = 10'000; step < 200'000; step += 7'919) {
    EXPECT_GE(learning_rate(s, step), learning_rate(s, step + 1));
  }
  EXPECT_THROW(learning_rate(s, 0), ValidationError);
}

TEST(Schedule, LinearWarmup) {
  const LrSchedule s{.init_lr = 0.005, .warmup_steps = 10'000, .warmup = WarmupShape::linear};
  EXPECT_DOUBLE_EQ(learning_rate(s, 5'000), 0.0025);
  EXPECT_DOUBLE_EQ(learning_rate(s, 10'000), 0.005);
  EXPECT_DOUBLE_EQ(learning_rate(s, 40'000), 0.0025);
}

TEST(Grid, CrossProduct) {
  const auto grid = hyperparam_grid();
  ASSERT_EQ(grid.size(), 128u);
  std::set<std::tuple<double, std::uint32_t, FinetuneScheduler, double>> unique;
  std::set<double> lrs, drops;
  std::set<std::uint32_t> batches;
  std::set<FinetuneScheduler> scheds;
  for (const auto& c : grid) {
    unique.emplace(c.learning_rate, c.batch_size, c.scheduler, c.dropout);
    lrs.insert(c.learning_rate);
    batches.insert(c.batch_size);
    scheds.insert(c.scheduler);
    drops.insert(c.dropout);
    EXPECT_EQ(c.max_epochs, 120u);
  }
  EXPECT_EQ(unique.size(), 128u);
  EXPECT_EQ(lrs, (std::set<double>{5e-5, 1e-4, 2e-4, 1e-3}));
  EXPECT_EQ(batches, (std::set<std::uint32_t>{8, 16, 32, 64}));
  EXPECT_EQ(drops, (std::set<double>{0.1, 0.15, 0.2, 0.3}));
  EXPECT_EQ(scheds.size(), 2u);
  EXPECT_EQ(grid.front().learning_rate, 5e-5);
  EXPECT_EQ(grid[1].dropout, 0.15);
}

TEST(Json, PlanAndGrid) {
  const auto j = nlohmann::json::parse(plan_to_json(plan_parallelism(128, 4, 32, 4096), LrSchedule{}));
  EXPECT_EQ(j["plan"]["data_parallel"], 32);
  EXPECT_EQ(j["plan"]["grad_accum"], 4);
  EXPECT_DOUBLE_EQ(j["schedule"]["init_lr"].get<double>(), 0.005);
  const auto g = nlohmann::json::parse(grid_to_json(hyperparam_grid()));
  ASSERT_TRUE(g.is_array());
  EXPECT_EQ(g.size(), 128u);
  EXPECT_EQ(g[0]["scheduler"], "constant");
}

}  // namespace
}  // namespace nahr
