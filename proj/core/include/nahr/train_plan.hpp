// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nahr {

/// Parallel layout of one training job. Both identities hold exactly:
///   model_parallel * data_parallel == gpus
///   data_parallel * micro_batch * grad_accum == global_batch
struct TrainPlan {
  std::uint64_t gpus = 0;
  std::uint64_t model_parallel = 0;
  std::uint64_t data_parallel = 0;
  std::uint64_t micro_batch = 0;
  std::uint64_t grad_accum = 0;
  std::uint64_t global_batch = 0;

  bool operator==(const TrainPlan&) const = default;
};

/// Throws ValidationError naming the identity that cannot hold.
TrainPlan plan_parallelism(std::uint64_t gpus, std::uint64_t model_parallel,
                           std::uint64_t micro_batch, std::uint64_t global_batch);

enum class WarmupShape : std::uint8_t { constant, linear };

struct LrSchedule {
  double init_lr = 0.005;
  std::uint64_t warmup_steps = 10'000;
  WarmupShape warmup = WarmupShape::constant;

  bool operator==(const LrSchedule&) const = default;
};

/// Inverse square-root decay after warmup: init_lr * sqrt(warmup / step).
/// During warmup the rate is init_lr (constant shape) or init_lr * step /
/// warmup (linear shape). Throws ValidationError for step < 1.
double learning_rate(const LrSchedule& schedule, std::int64_t step);

enum class FinetuneScheduler : std::uint8_t { constant, cosine };
std::string_view to_string(FinetuneScheduler s) noexcept;

struct FinetuneConfig {
  double learning_rate = 0.0;
  std::uint32_t batch_size = 0;
  FinetuneScheduler scheduler = FinetuneScheduler::constant;
  double dropout = 0.0;
  std::uint32_t max_epochs = 120;

  bool operator==(const FinetuneConfig&) const = default;
};

inline constexpr double kGridLearningRates[] = {5e-5, 1e-4, 2e-4, 1e-3};
inline constexpr std::uint32_t kGridBatchSizes[] = {8, 16, 32, 64};
inline constexpr FinetuneScheduler kGridSchedulers[] = {FinetuneScheduler::constant,
                                                        FinetuneScheduler::cosine};
inline constexpr double kGridDropouts[] = {0.1, 0.15, 0.2, 0.3};
inline constexpr std::uint32_t kMaxFinetuneEpochs = 120;

/// Full cross product, learning rate outermost, dropout innermost.
std::vector<FinetuneConfig> hyperparam_grid();

std::string plan_to_json(const TrainPlan& plan, const LrSchedule& schedule);
std::string grid_to_json(const std::vector<FinetuneConfig>& grid);

}  // namespace nahr
