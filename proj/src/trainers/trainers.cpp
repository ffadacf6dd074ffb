#include "mtrl/trainers/trainers.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>

#include "mtrl/errors.hpp"

namespace mtrl::trainers {

using policy::ActorNetwork;
using policy::CriticNetwork;

void MultiTaskSchedule::validate(int t_max) const {
  if (env_names.size() < 2) {
    throw std::invalid_argument("vanilla multi-task needs at least 2 environments, got " +
                                std::to_string(env_names.size()));
  }
  if (steps_per_visit < 1 || steps_per_visit % t_max != 0) {
    throw ConfigError("steps_per_visit must be a positive multiple of t_max");
  }
  if (total_steps_per_env < 0) throw ConfigError("total_steps_per_env must be >= 0");
}

MultiTaskResult train_vanilla_multitask(const MultiTaskSchedule& schedule,
                                        const a2c::TrainConfig& config) {
  config.validate();
  schedule.validate(config.t_max);
  const std::size_t n = schedule.env_names.size();

  Rng init(a2c::derive_seed(config.seed, a2c::Stream::Init));
  auto actor = ActorNetwork::make(env::kObsDim, env::kActionDim, n, init, config.hidden_units);
  auto critic = CriticNetwork::make_multitask(env::kObsDim, n, init, config.hidden_units);
  a2c::A2COptimizer optimizer(actor, critic);

  std::vector<env::EnvCursor> cursors;
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < n; ++i) {
    cursors.emplace_back(env::make_variant(schedule.env_names[i]));
    rngs.push_back(Rng::stream(a2c::derive_seed(config.seed, a2c::Stream::Rollout), i));
  }
  const eval::EvalOptions eval_opts{config.eval_rollouts,
                                    a2c::derive_seed(config.seed, a2c::Stream::Eval),
                                    config.eval_deterministic};
  const auto start = std::chrono::steady_clock::now();

  MultiTaskResult result;
  result.steps_per_env.assign(n, 0);
  std::vector<long long> next_eval(n, config.eval_every);
  auto record = [&](std::size_t i) {
    const auto report = eval::evaluate(actor, cursors[i].spec(), i, eval_opts);
    const double wall =
        config.record_wall_clock
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            : 0.0;
    result.curves.push_back({schedule.env_names[i], result.steps_per_env[i], report.mean_return,
                             report.std_return, wall});
  };

  const long long budget = schedule.total_steps_per_env;
  bool remaining = budget > 0;
  while (remaining) {
    remaining = false;
    for (std::size_t i = 0; i < n; ++i) {
      auto& steps = result.steps_per_env[i];
      if (steps >= budget) continue;
      result.visits.push_back(i);
      const long long visit_end = std::min(budget, steps + schedule.steps_per_visit);
      while (steps < visit_end) {
        const int t_max = static_cast<int>(std::min<long long>(config.t_max, visit_end - steps));
        const auto segment = a2c::collect_segment(cursors[i], actor, critic, i, t_max, rngs[i]);
        a2c::a2c_update(actor, critic, segment, config, optimizer);
        steps += static_cast<long long>(segment.size());
      }
      if (config.eval_every > 0 && steps >= next_eval[i]) {
        record(i);
        while (next_eval[i] <= steps) next_eval[i] += config.eval_every;
      }
      if (steps < budget) remaining = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const long long steps = result.steps_per_env[i];
    if (steps == 0) continue;
    const bool have = std::any_of(result.curves.begin(), result.curves.end(), [&](const auto& r) {
      return r.env_name == schedule.env_names[i] && r.env_steps == steps;
    });
    if (!have) record(i);
  }

  auto& ck = result.checkpoint;
  ck.kind = "multitask";
  ck.env_names = schedule.env_names;
  ck.actor = std::move(actor);
  ck.critic = std::move(critic);
  ck.config = a2c::to_key_values(config);
  ck.config["steps_per_visit"] = std::to_string(schedule.steps_per_visit);
  ck.config["total_steps_per_env"] = std::to_string(schedule.total_steps_per_env);
  ck.seed = config.seed;
  return result;
}

FinetuneResult transfer_and_finetune(const io::Checkpoint& source, std::string_view target_env,
                                     const a2c::TrainConfig& config,
                                     const FinetuneOptions& options) {
  config.validate();
  const auto spec = env::make_variant(target_env);
  if (!source.critic) {
    throw std::invalid_argument("fine-tuning needs a checkpoint with a critic");
  }
  const auto& aa = source.actor.net().architecture();
  const auto& ca = source.critic->net().architecture();
  if (aa.num_heads != 1 || ca.num_heads != 1 || aa.in_dim != env::kObsDim ||
      ca.in_dim != env::kObsDim || source.actor.action_dim() != env::kActionDim) {
    throw std::invalid_argument(
        "fine-tuning source must be a single-task actor/critic for a 2-d observation, 2-d action "
        "environment");
  }

  FinetuneResult result;
  ActorNetwork actor = source.actor;
  CriticNetwork critic = *source.critic;
  result.mask = options.full_network ? a2c::FreezeMask::all_trainable(actor, critic)
                                     : a2c::FreezeMask::last_layers_only(actor, critic);
  result.curve = a2c::run_a2c(actor, critic, spec, config, &result.mask);

  auto& ck = result.checkpoint;
  ck.kind = "finetune";
  ck.env_names = {spec.name};
  ck.actor = std::move(actor);
  ck.critic = std::move(critic);
  ck.config = a2c::to_key_values(config);
  ck.config["full_network"] = options.full_network ? "true" : "false";
  if (!source.env_names.empty()) ck.config["source_env"] = source.env_names.front();
  ck.seed = config.seed;
  return result;
}

std::vector<eval::EvalReport> evaluate_matrix(const io::Checkpoint& checkpoint,
                                              const std::vector<std::string>& env_names,
                                              const eval::EvalOptions& options) {
  std::vector<eval::EvalReport> reports;
  reports.reserve(env_names.size());
  for (const auto& name : env_names) {
    reports.push_back(eval::evaluate(checkpoint.actor, name, checkpoint.head_for(name), options));
  }
  return reports;
}

std::string format_report(const std::vector<eval::EvalReport>& reports) {
  std::string out = "environment          mean +- std            rollouts\n";
  char line[160];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-20s %10.2f +- %-10.2f %d%s\n", r.env_name.c_str(),
                  r.mean_return, r.std_return, r.n_rollouts, r.std_defined ? "" : " (std undefined)");
    out += line;
  }
  return out;
}

}  // namespace mtrl::trainers
