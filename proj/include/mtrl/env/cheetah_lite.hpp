#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mtrl::env {

inline constexpr std::size_t kObsDim = 2;
inline constexpr std::size_t kActionDim = 2;

using Observation = std::array<double, kObsDim>;

/// Body parameters of a CheetahLite variant.
///
/// A 1-D point body driven by a force actuator (action 0) and a posture
/// actuator (action 1) that scales the effective drag:
///   c_eff = drag * (1 + posture_gain * a2)
///   v'    = v + dt * (f_max * a1 / mass - c_eff * v)
///   x'    = x + dt * v'
///   r     = v' - ctrl_cost * (a1^2 + a2^2)
/// with both actions clamped to [-1, 1].
struct MorphologySpec {
  std::string name;
  double mass = 1.0;
  double drag = 0.5;
  double f_max = 2.0;
  double posture_gain = 0.5;
  double ctrl_cost = 0.05;
  double dt = 0.05;
  int horizon = 200;

  /// Throws ConfigError unless all positive fields are positive and posture_gain is in [0, 1).
  void validate() const;
};

struct EnvState {
  double x = 0.0;
  double v = 0.0;
  int t = 0;
};

struct StepResult {
  Observation observation{};
  double reward = 0.0;
  bool done = false;
};

/// All registered names: Base plus the six +-25% variants.
std::span<const std::string_view> variant_names();
/// The six morphological variants used for multi-task experiments (Base excluded).
std::vector<std::string> task_variants();

/// Throws ConfigError listing the valid names when `name` is unknown.
MorphologySpec make_variant(std::string_view name);

std::pair<EnvState, Observation> reset(const MorphologySpec& spec);

/// Throws std::logic_error when called on a finished episode.
std::pair<EnvState, StepResult> step(const EnvState& state, std::span<const double> action,
                                     const MorphologySpec& spec);

Observation observe(const EnvState& state, const MorphologySpec& spec);

/// An environment instance that survives across rollout segments.
class EnvCursor {
 public:
  explicit EnvCursor(MorphologySpec spec);

  const MorphologySpec& spec() const { return spec_; }
  const EnvState& state() const { return state_; }
  const Observation& observation() const { return obs_; }

  StepResult step(std::span<const double> action);
  void reset();

  /// Place the cursor at an arbitrary mid-episode state.
  void set_state(const EnvState& state);

  long long total_steps() const { return total_steps_; }

 private:
  MorphologySpec spec_;
  EnvState state_;
  Observation obs_{};
  long long total_steps_ = 0;
};

/// Undiscounted return of holding `action` for a full episode from reset.
double constant_action_return(const MorphologySpec& spec, std::span<const double> action);

struct ConstantActionOptimum {
  std::array<double, kActionDim> action{};
  double episode_return = 0.0;
};

/// Exhaustive search over constant actions on a (points x points) grid spanning [-1, 1]^2.
ConstantActionOptimum best_constant_action(const MorphologySpec& spec, int points = 21);

}  // namespace mtrl::env
