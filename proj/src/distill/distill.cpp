#include "mtrl/distill/distill.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>
#include <algorithm>
#include <stdexcept>

#include "mtrl/a2c/a2c.hpp"
#include "mtrl/errors.hpp"
#include "mtrl/eval/evaluate.hpp"
#include "mtrl/io/text.hpp"

namespace mtrl::distill {

using nn::Tensor;
using policy::ActorNetwork;

void DistillConfig::validate() const {
  if (!(p_student >= 0.0 && p_student <= 1.0)) throw ConfigError("p_student must lie in [0, 1]");
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  if (batch_segments < 1) throw ConfigError("batch_segments must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (total_env_steps < 0) throw ConfigError("total_env_steps must be >= 0");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (eval_rollouts < 1) throw ConfigError("eval_rollouts must be >= 1");
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (kl_window < 1) throw ConfigError("kl_window must be >= 1");
}

DistillConfig DistillConfig::from_key_values(const io::KeyValues& kv, DistillConfig c) {
  c.p_student = kv.get_double("p_student", c.p_student);
  c.t_max = static_cast<int>(kv.get_int("t_max", c.t_max));
  c.batch_segments = static_cast<int>(kv.get_int("batch_segments", c.batch_segments));
  c.lr = kv.get_double("lr", c.lr);
  c.total_env_steps = kv.get_int("total_env_steps", c.total_env_steps);
  c.eval_every = kv.get_int("eval_every", c.eval_every);
  c.eval_rollouts = static_cast<int>(kv.get_int("eval_rollouts", c.eval_rollouts));
  c.eval_deterministic = kv.get_bool("eval_deterministic", c.eval_deterministic);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.hidden_units = static_cast<std::size_t>(kv.get_int("hidden_units", static_cast<long long>(c.hidden_units)));
  c.kl_window = static_cast<int>(kv.get_int("kl_window", c.kl_window));
  c.record_wall_clock = kv.get_bool("record_wall_clock", c.record_wall_clock);
  c.validate();
  return c;
}

DistillConfig DistillConfig::from_key_values(const io::KeyValues& kv) {
  return from_key_values(kv, DistillConfig{});
}

std::map<std::string, std::string> to_key_values(const DistillConfig& c) {
  return {{"p_student", io::format_double(c.p_student)},
          {"t_max", std::to_string(c.t_max)},
          {"batch_segments", std::to_string(c.batch_segments)},
          {"lr", io::format_double(c.lr)},
          {"total_env_steps", std::to_string(c.total_env_steps)},
          {"eval_every", std::to_string(c.eval_every)},
          {"eval_rollouts", std::to_string(c.eval_rollouts)},
          {"eval_deterministic", c.eval_deterministic ? "true" : "false"},
          {"seed", std::to_string(c.seed)},
          {"hidden_units", std::to_string(c.hidden_units)},
          {"kl_window", std::to_string(c.kl_window)},
          {"record_wall_clock", c.record_wall_clock ? "true" : "false"}};
}

DistillBatch collect_distill_batch(env::EnvCursor& cursor, const ActorNetwork& teacher,
                                   const ActorNetwork& student, std::size_t head_id,
                                   const DistillConfig& config, Rng& rng) {
  DistillBatch batch;
  batch.env_id = head_id;
  for (int s = 0; s < config.batch_segments; ++s) {
    const bool student_acts = rng.bernoulli(config.p_student);
    batch.student_segments += student_acts ? 1 : 0;
    ++batch.segments;
    for (int t = 0; t < config.t_max; ++t) {
      const env::Observation obs = cursor.observation();
      auto teacher_params = teacher.policy(obs, 0);
      const auto behaviour = student_acts ? student.policy(obs, head_id) : teacher_params;
      const auto action = policy::sample_action(behaviour, rng);
      batch.observations.push_back(obs);
      batch.teacher_params.push_back(std::move(teacher_params));
      if (cursor.step(action).done) {
        cursor.reset();
        break;
      }
    }
  }
  return batch;
}

namespace {

Tensor observation_batch(const DistillBatch& batch) {
  Tensor obs(env::kObsDim, batch.size());
  for (std::size_t c = 0; c < batch.size(); ++c) {
    for (std::size_t i = 0; i < env::kObsDim; ++i) obs(i, c) = batch.observations[c][i];
  }
  return obs;
}

void require_valid(const DistillBatch& batch) {
  if (batch.observations.empty() || batch.observations.size() != batch.teacher_params.size()) {
    throw DimensionError("distill batch must be non-empty with one teacher target per observation");
  }
}

}  // namespace

double distill_loss(const ActorNetwork& student, const DistillBatch& batch) {
  require_valid(batch);
  const auto fwd = student.forward(observation_batch(batch), batch.env_id);
  double sum = 0.0;
  for (std::size_t c = 0; c < batch.size(); ++c) {
    sum += policy::kl_diag_gaussian(batch.teacher_params[c], fwd.params[c]);
  }
  return sum / static_cast<double>(batch.size());
}

std::pair<double, policy::MultiHeadNet::Grads> distill_gradients(const ActorNetwork& student,
                                                                 const DistillBatch& batch) {
  require_valid(batch);
  const auto fwd = student.forward(observation_batch(batch), batch.env_id);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double sum = 0.0;
  std::vector<policy::GaussianGrad> grads;
  grads.reserve(batch.size());
  for (std::size_t c = 0; c < batch.size(); ++c) {
    sum += policy::kl_diag_gaussian(batch.teacher_params[c], fwd.params[c]);
    auto g = policy::kl_diag_gaussian_grad(batch.teacher_params[c], fwd.params[c]);
    for (auto& v : g.mean) v *= inv_n;
    for (auto& v : g.log_var) v *= inv_n;
    grads.push_back(std::move(g));
  }
  return {sum * inv_n, student.backward(fwd, grads)};
}

double distill_update(ActorNetwork& student, const DistillBatch& batch, nn::RmsPropState& state,
                      double lr) {
  auto [loss, grads] = distill_gradients(student, batch);
  if (!std::isfinite(loss)) {
    throw NonFiniteError("distill_update: non-finite KL loss on env " +
                         std::to_string(batch.env_id));
  }
  const auto slots = student.net().gradient_slots(std::as_const(grads));
  auto params = student.net().parameters();
  nn::rmsprop_step(params, slots, state, lr);
  return loss;
}

namespace {

double window_mean(const std::vector<double>& xs, bool from_front, int window) {
  if (xs.empty()) return 0.0;
  const std::size_t n = std::min<std::size_t>(xs.size(), static_cast<std::size_t>(window));
  const auto first = from_front ? xs.begin() : xs.end() - static_cast<std::ptrdiff_t>(n);
  return std::accumulate(first, first + static_cast<std::ptrdiff_t>(n), 0.0) /
         static_cast<double>(n);
}

DistillResult run_distill(const std::vector<std::string>& env_names,
                          const std::vector<ActorNetwork>& teachers, const DistillConfig& config,
                          double p_student, const std::string& kind) {
  config.validate();
  if (env_names.empty()) throw std::invalid_argument("distillation needs at least one environment");
  if (teachers.size() != env_names.size()) {
    throw std::invalid_argument("distillation: " + std::to_string(teachers.size()) +
                                " teachers for " + std::to_string(env_names.size()) +
                                " environments");
  }
  const std::size_t n = env_names.size();
  DistillConfig run_config = config;
  run_config.p_student = p_student;

  Rng init(a2c::derive_seed(config.seed, a2c::Stream::Init));
  auto student =
      ActorNetwork::make(env::kObsDim, env::kActionDim, n, init, config.hidden_units);
  nn::RmsPropState state(std::as_const(student).net().parameters());

  std::vector<env::EnvCursor> cursors;
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < n; ++i) {
    cursors.emplace_back(env::make_variant(env_names[i]));
    rngs.push_back(Rng::stream(a2c::derive_seed(config.seed, a2c::Stream::Rollout), i));
  }
  const eval::EvalOptions eval_opts{config.eval_rollouts,
                                    a2c::derive_seed(config.seed, a2c::Stream::Eval),
                                    config.eval_deterministic};
  const auto start = std::chrono::steady_clock::now();

  DistillResult result;
  result.kl.resize(n);
  std::vector<long long> steps(n, 0);
  std::vector<long long> next_eval(n, config.eval_every);
  auto record = [&](std::size_t i) {
    const auto report = eval::evaluate(student, cursors[i].spec(), i, eval_opts);
    const double wall =
        config.record_wall_clock
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            : 0.0;
    result.curves.push_back({env_names[i], steps[i], report.mean_return, report.std_return, wall});
  };

  bool remaining = config.total_env_steps > 0;
  while (remaining) {
    remaining = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (steps[i] >= config.total_env_steps) continue;
      DistillConfig visit = run_config;
      visit.t_max = static_cast<int>(
          std::min<long long>(run_config.t_max, config.total_env_steps - steps[i]));
      if (visit.batch_segments > 1) {
        const long long left = config.total_env_steps - steps[i];
        visit.batch_segments = static_cast<int>(
            std::min<long long>(visit.batch_segments, (left + visit.t_max - 1) / visit.t_max));
      }
      const long long before = cursors[i].total_steps();
      const auto batch = collect_distill_batch(cursors[i], teachers[i], student, i, visit, rngs[i]);
      steps[i] += cursors[i].total_steps() - before;
      result.kl[i].batch_kl.push_back(distill_update(student, batch, state, config.lr));
      if (config.eval_every > 0 && steps[i] >= next_eval[i]) {
        record(i);
        while (next_eval[i] <= steps[i]) next_eval[i] += config.eval_every;
      }
      if (steps[i] < config.total_env_steps) remaining = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (steps[i] > 0) {
      const bool have = std::any_of(result.curves.begin(), result.curves.end(), [&](const auto& r) {
        return r.env_name == env_names[i] && r.env_steps == steps[i];
      });
      if (!have) record(i);
    }
    auto& kl = result.kl[i];
    kl.env_name = env_names[i];
    kl.initial_kl = window_mean(kl.batch_kl, true, config.kl_window);
    kl.final_kl = window_mean(kl.batch_kl, false, config.kl_window);
  }

  auto& ck = result.checkpoint;
  ck.kind = kind;
  ck.env_names = env_names;
  ck.actor = std::move(student);
  ck.config = to_key_values(run_config);
  ck.seed = config.seed;
  return result;
}

}  // namespace

DistillResult train_distill_multitask(const std::vector<std::string>& env_names,
                                      const std::vector<ActorNetwork>& teachers,
                                      const DistillConfig& config) {
  return run_distill(env_names, teachers, config, 1.0, "distill");
}

DistillResult train_distill_single(const std::string& env_name, const ActorNetwork& teacher,
                                   const DistillConfig& config) {
  return run_distill({env_name}, {teacher}, config, config.p_student, "distill");
}

}  // namespace mtrl::distill
