#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mtrl/env/cheetah_lite.hpp"
#include "mtrl/policy/networks.hpp"

namespace mtrl::eval {

inline constexpr int kDefaultRollouts = 20;

struct EvalOptions {
  int n_rollouts = kDefaultRollouts;
  std::uint64_t seed = 0;
  /// Act with the policy mean instead of sampling.
  bool deterministic = false;
};

/// Cumulative reward statistics over full-episode rollouts.
struct EvalReport {
  std::string env_name;
  int n_rollouts = 0;
  double mean_return = 0.0;
  /// Sample standard deviation (n - 1 denominator); 0 when n_rollouts < 2.
  double std_return = 0.0;
  bool std_defined = false;
  std::vector<double> per_rollout_returns;

  bool operator==(const EvalReport&) const = default;
};

/// Mean and sample std of `returns`. Pure function of its input.
EvalReport summarize(std::string env_name, std::vector<double> returns);

/// Runs options.n_rollouts episodes. Rollout i draws from its own RNG stream
/// derived from (options.seed, i), so results do not depend on rollout order.
EvalReport evaluate(const policy::ActorNetwork& actor, const env::MorphologySpec& spec,
                    std::size_t head_id, const EvalOptions& options = {});
EvalReport evaluate(const policy::ActorNetwork& actor, std::string_view env_name,
                    std::size_t head_id, const EvalOptions& options = {});

}  // namespace mtrl::eval
