// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/train_plan.hpp"

#include <fmt/format.h>

#include <cmath>

#include "json_io.hpp"
#include "nahr/error.hpp"

namespace nahr {

TrainPlan plan_parallelism(std::uint64_t gpus, std::uint64_t model_parallel,
                           std::uint64_t micro_batch, std::uint64_t global_batch) {
  if (gpus == 0 || model_parallel == 0 || micro_batch == 0 || global_batch == 0) {
    throw ValidationError("gpus, model_parallel, micro_batch and global_batch must all be positive");
  }
  if (gpus % model_parallel != 0) {
    throw ValidationError(fmt::format(
        "model_parallel * data_parallel = gpus cannot hold: {} does not divide {}", model_parallel, gpus));
  }
  TrainPlan plan;
  plan.gpus = gpus;
  plan.model_parallel = model_parallel;
  plan.data_parallel = gpus / model_parallel;
  plan.micro_batch = micro_batch;
  plan.global_batch = global_batch;
  const std::uint64_t per_step = plan.data_parallel * micro_batch;
  if (global_batch % per_step != 0) {
    throw ValidationError(fmt::format(
        "data_parallel * micro_batch * grad_accum = global_batch cannot hold: {} x {} = {} does not "
        "divide {}",
        plan.data_parallel, micro_batch, per_step, global_batch));
  }
  plan.grad_accum = global_batch / per_step;
  return plan;
}

double learning_rate(const LrSchedule& schedule, std::int64_t step) {
  if (step < 1) throw ValidationError(fmt::format("step must be >= 1, got {}", step));
  const auto s = static_cast<std::uint64_t>(step);
  if (s <= schedule.warmup_steps) {
    if (schedule.warmup == WarmupShape::linear) {
      return schedule.init_lr * static_cast<double>(s) / static_cast<double>(schedule.warmup_steps);
    }
    return schedule.init_lr;
  }
  return schedule.init_lr *
         std::sqrt(static_cast<double>(schedule.warmup_steps) / static_cast<double>(s));
}

std::string_view to_string(FinetuneScheduler s) noexcept {
  return s == FinetuneScheduler::constant ? "constant" : "cosine";
}

std::vector<FinetuneConfig> hyperparam_grid() {
  std::vector<FinetuneConfig> grid;
  for (double lr : kGridLearningRates) {
    for (std::uint32_t batch : kGridBatchSizes) {
      for (FinetuneScheduler sched : kGridSchedulers) {
        for (double dropout : kGridDropouts) {
          grid.push_back(FinetuneConfig{lr, batch, sched, dropout, kMaxFinetuneEpochs});
        }
      }
    }
  }
  return grid;
}

std::string plan_to_json(const TrainPlan& plan, const LrSchedule& schedule) {
  return nlohmann::json{{"plan", plan}, {"schedule", schedule}}.dump(2);
}

std::string grid_to_json(const std::vector<FinetuneConfig>& grid) { return nlohmann::json(grid).dump(2); }

}  // namespace nahr
