#include "mtrl/env/cheetah_lite.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

#include "mtrl/errors.hpp"

namespace mtrl::env {

namespace {

constexpr std::array<std::string_view, 7> kNames = {
    "Base", "SmallMass", "BigMass", "SmallDrag", "BigDrag", "SmallForce", "BigForce"};

constexpr double kSmall = 0.75;
constexpr double kBig = 1.25;

}  // namespace

void MorphologySpec::validate() const {
  if (!(mass > 0.0 && drag > 0.0 && f_max > 0.0 && dt > 0.0 && horizon > 0)) {
    throw ConfigError("morphology '" + name + "': mass, drag, f_max, dt and horizon must be > 0");
  }
  if (!(posture_gain >= 0.0 && posture_gain < 1.0)) {
    throw ConfigError("morphology '" + name + "': posture_gain must lie in [0, 1)");
  }
  if (!(ctrl_cost >= 0.0)) {
    throw ConfigError("morphology '" + name + "': ctrl_cost must be >= 0");
  }
}

std::span<const std::string_view> variant_names() { return kNames; }

std::vector<std::string> task_variants() {
  return {kNames.begin() + 1, kNames.end()};
}

MorphologySpec make_variant(std::string_view name) {
  MorphologySpec spec;
  spec.name = std::string(name);
  if (name == "Base") {
  } else if (name == "SmallMass") {
    spec.mass *= kSmall;
  } else if (name == "BigMass") {
    spec.mass *= kBig;
  } else if (name == "SmallDrag") {
    spec.drag *= kSmall;
  } else if (name == "BigDrag") {
    spec.drag *= kBig;
  } else if (name == "SmallForce") {
    spec.f_max *= kSmall;
  } else if (name == "BigForce") {
    spec.f_max *= kBig;
  } else {
    std::string msg = "unknown environment '" + std::string(name) + "'; valid names:";
    for (auto n : kNames) msg += " " + std::string(n);
    throw ConfigError(msg);
  }
  return spec;
}

Observation observe(const EnvState& state, const MorphologySpec& spec) {
  return {state.v, static_cast<double>(state.t) / spec.horizon};
}

std::pair<EnvState, Observation> reset(const MorphologySpec& spec) {
  EnvState s;
  return {s, observe(s, spec)};
}

std::pair<EnvState, StepResult> step(const EnvState& state, std::span<const double> action,
                                     const MorphologySpec& spec) {
  if (state.t >= spec.horizon) {
    throw std::logic_error("step called on a finished episode (t = " + std::to_string(state.t) +
                           ")");
  }
  if (action.size() != kActionDim) {
    throw DimensionError("step: expected action of dim 2, got " + std::to_string(action.size()));
  }
  const double a1 = std::clamp(action[0], -1.0, 1.0);
  const double a2 = std::clamp(action[1], -1.0, 1.0);
  const double c_eff = spec.drag * (1.0 + spec.posture_gain * a2);

  EnvState next;
  next.v = state.v + spec.dt * (spec.f_max * a1 / spec.mass - c_eff * state.v);
  next.x = state.x + spec.dt * next.v;
  next.t = state.t + 1;

  StepResult r;
  r.observation = observe(next, spec);
  r.reward = next.v - spec.ctrl_cost * (a1 * a1 + a2 * a2);
  r.done = next.t == spec.horizon;
  return {next, r};
}

EnvCursor::EnvCursor(MorphologySpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  reset();
}

void EnvCursor::reset() { std::tie(state_, obs_) = env::reset(spec_); }

void EnvCursor::set_state(const EnvState& state) {
  if (state.t < 0 || state.t > spec_.horizon) {
    throw std::out_of_range("EnvCursor::set_state: t outside [0, horizon]");
  }
  state_ = state;
  obs_ = observe(state_, spec_);
}

StepResult EnvCursor::step(std::span<const double> action) {
  auto [next, result] = env::step(state_, action, spec_);
  state_ = next;
  obs_ = result.observation;
  ++total_steps_;
  return result;
}

double constant_action_return(const MorphologySpec& spec, std::span<const double> action) {
  auto [state, obs] = reset(spec);
  double total = 0.0;
  for (int t = 0; t < spec.horizon; ++t) {
    auto [next, r] = step(state, action, spec);
    total += r.reward;
    state = next;
  }
  return total;
}

ConstantActionOptimum best_constant_action(const MorphologySpec& spec, int points) {
  ConstantActionOptimum best;
  best.episode_return = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      const std::array<double, 2> a = {-1.0 + 2.0 * i / (points - 1),
                                       -1.0 + 2.0 * j / (points - 1)};
      const double ret = constant_action_return(spec, a);
      if (ret > best.episode_return) {
        best.episode_return = ret;
        best.action = a;
      }
    }
  }
  return best;
}

}  // namespace mtrl::env
