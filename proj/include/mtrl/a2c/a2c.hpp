#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mtrl/env/cheetah_lite.hpp"
#include "mtrl/eval/curve.hpp"
#include "mtrl/io/checkpoint.hpp"
#include "mtrl/io/config.hpp"
#include "mtrl/nn/rmsprop.hpp"
#include "mtrl/policy/networks.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::a2c {

struct TrainConfig {
  double lr = 0.0007;
  double gamma = 0.99;
  int t_max = 5;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  /// 0 disables clipping.
  double max_grad_norm = 0.0;
  long long total_env_steps = 200000;
  long long eval_every = 10000;
  int eval_rollouts = 20;
  bool eval_deterministic = false;
  std::uint64_t seed = 0;
  std::size_t hidden_units = policy::kHiddenUnits;
  /// Off by default so curve files are reproducible byte for byte.
  bool record_wall_clock = false;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  /// Overrides `base` with any of this struct's keys present in `kv`.
  static TrainConfig from_key_values(const io::KeyValues& kv, TrainConfig base);
  static TrainConfig from_key_values(const io::KeyValues& kv);
};

/// Up to t_max consecutive transitions from one environment.
struct RolloutSegment {
  std::vector<env::Observation> observations;
  std::vector<std::vector<double>> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  bool done = false;
  /// V(s_{t+k}) from the critic, 0 when the segment ended the episode.
  double bootstrap_value = 0.0;
  std::size_t head_id = 0;

  std::size_t size() const { return rewards.size(); }
};

/// Steps `cursor` up to t_max times under the actor's policy for `head_id`,
/// recording critic values. On episode end the segment is marked done and
/// the cursor is reset for the next segment.
RolloutSegment collect_segment(env::EnvCursor& cursor, const policy::ActorNetwork& actor,
                               const policy::CriticNetwork& critic, std::size_t head_id,
                               int t_max, Rng& rng);

struct AdvantagesReturns {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// n-step returns R_t = sum_{i<k-t} gamma^i r_{t+i} + gamma^{k-t} V(s_{t+k})
/// and advantages R_t - V(s_t), at every offset of the segment.
AdvantagesReturns compute_advantages_returns(const RolloutSegment& segment, double gamma);

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

/// Which parameter tensors may change, aligned with MultiHeadNet::parameters().
struct FreezeMask {
  std::vector<bool> actor;
  std::vector<bool> critic;

  static FreezeMask all_trainable(const policy::ActorNetwork& actor,
                                  const policy::CriticNetwork& critic);
  /// Only the last layer of every actor head and every critic head is trainable.
  static FreezeMask last_layers_only(const policy::ActorNetwork& actor,
                                     const policy::CriticNetwork& critic);
};

struct A2COptimizer {
  nn::RmsPropState actor;
  nn::RmsPropState critic;

  A2COptimizer() = default;
  A2COptimizer(const policy::ActorNetwork& actor, const policy::CriticNetwork& critic);
};

struct A2CGradients {
  LossStats stats;
  policy::MultiHeadNet::Grads actor;
  policy::MultiHeadNet::Grads critic;
};

/// Segment loss
///   L = sum_t [-log pi(a_t|s_t) A_t - entropy_coef H(pi(s_t))] + value_coef sum_t (R_t - V(s_t))^2
/// with A_t computed from the segment's recorded values, so it is a constant
/// with respect to both networks.
double a2c_loss(const policy::ActorNetwork& actor, const policy::CriticNetwork& critic,
                const RolloutSegment& segment, const TrainConfig& config);
A2CGradients a2c_gradients(const policy::ActorNetwork& actor, const policy::CriticNetwork& critic,
                           const RolloutSegment& segment, const TrainConfig& config);

/// One RMSprop step on both networks. `mask` (optional) freezes tensors.
/// Throws NonFiniteError if the loss is not finite.
LossStats a2c_update(policy::ActorNetwork& actor, policy::CriticNetwork& critic,
                     const RolloutSegment& segment, const TrainConfig& config,
                     A2COptimizer& optimizer, const FreezeMask* mask = nullptr);

/// Fixed RNG stream indices derived from the run seed.
enum class Stream : std::uint64_t { Init = 0, Rollout = 1, Eval = 2 };
std::uint64_t derive_seed(std::uint64_t seed, Stream stream);

struct TrainResult {
  io::Checkpoint checkpoint;
  std::vector<eval::CurveRow> curve;
};

/// Trains actor/critic in place on one environment for config.total_env_steps,
/// evaluating every config.eval_every steps (and once more at the end).
std::vector<eval::CurveRow> run_a2c(policy::ActorNetwork& actor, policy::CriticNetwork& critic,
                                    const env::MorphologySpec& spec, const TrainConfig& config,
                                    const FreezeMask* mask = nullptr);

/// Single-task A2C from random initialisation.
TrainResult train_single(std::string_view env_name, const TrainConfig& config);

/// Resolved config as flat key/value pairs (the checkpoint's config snapshot).
std::map<std::string, std::string> to_key_values(const TrainConfig& config);

}  // namespace mtrl::a2c
