#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mtrl/a2c/a2c.hpp"
#include "mtrl/eval/curve.hpp"
#include "mtrl/eval/evaluate.hpp"
#include "mtrl/io/checkpoint.hpp"

namespace mtrl::trainers {

/// Round-robin visiting order for vanilla multi-task training.
struct MultiTaskSchedule {
  std::vector<std::string> env_names;
  /// Environment steps per visit; must be a whole number of t_max segments.
  long long steps_per_visit = 5;
  long long total_steps_per_env = 50000;

  void validate(int t_max) const;
};

struct MultiTaskResult {
  io::Checkpoint checkpoint;
  std::vector<eval::CurveRow> curves;
  /// Environment index of every visit, in order.
  std::vector<std::size_t> visits;
  /// Environment steps consumed per environment.
  std::vector<long long> steps_per_env;
};

/// Shared-trunk actor with one head per environment and a critic with one
/// shared hidden layer plus per-environment heads, trained with A2C while
/// cycling E_1..E_n. Each visit updates only the shared trunks and the
/// visited environment's heads. Throws std::invalid_argument for n < 2.
MultiTaskResult train_vanilla_multitask(const MultiTaskSchedule& schedule,
                                        const a2c::TrainConfig& config);

struct FinetuneOptions {
  /// Train every layer instead of only the final actor and critic layers.
  bool full_network = false;
};

struct FinetuneResult {
  io::Checkpoint checkpoint;
  std::vector<eval::CurveRow> curve;
  a2c::FreezeMask mask;
};

/// Copies a single-task checkpoint and continues A2C on `target_env` with
/// everything but the last actor and critic layers frozen. The optimizer
/// state starts fresh. Throws std::invalid_argument if the source is not a
/// single-task actor/critic pair for this environment family.
FinetuneResult transfer_and_finetune(const io::Checkpoint& source, std::string_view target_env,
                                     const a2c::TrainConfig& config,
                                     const FinetuneOptions& options = {});

/// 20-rollout (by default) report for each environment, using the
/// checkpoint's head for that environment.
std::vector<eval::EvalReport> evaluate_matrix(const io::Checkpoint& checkpoint,
                                              const std::vector<std::string>& env_names,
                                              const eval::EvalOptions& options = {});

/// Plain-text table: env, mean +- std, rollouts.
std::string format_report(const std::vector<eval::EvalReport>& reports);

}  // namespace mtrl::trainers
