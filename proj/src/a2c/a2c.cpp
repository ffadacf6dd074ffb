#include "mtrl/a2c/a2c.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "mtrl/errors.hpp"
#include "mtrl/eval/evaluate.hpp"
#include "mtrl/io/text.hpp"

namespace mtrl::a2c {

using nn::Tensor;
using policy::ActorNetwork;
using policy::CriticNetwork;
using policy::GaussianGrad;

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  if (!(entropy_coef >= 0.0)) throw ConfigError("entropy_coef must be >= 0");
  if (!(value_coef >= 0.0)) throw ConfigError("value_coef must be >= 0");
  if (!(max_grad_norm >= 0.0)) throw ConfigError("max_grad_norm must be >= 0");
  if (total_env_steps < 0) throw ConfigError("total_env_steps must be >= 0");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (eval_rollouts < 1) throw ConfigError("eval_rollouts must be >= 1");
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
}

TrainConfig TrainConfig::from_key_values(const io::KeyValues& kv, TrainConfig c) {
  c.lr = kv.get_double("lr", c.lr);
  c.gamma = kv.get_double("gamma", c.gamma);
  c.t_max = static_cast<int>(kv.get_int("t_max", c.t_max));
  c.entropy_coef = kv.get_double("entropy_coef", c.entropy_coef);
  c.value_coef = kv.get_double("value_coef", c.value_coef);
  c.max_grad_norm = kv.get_double("max_grad_norm", c.max_grad_norm);
  c.total_env_steps = kv.get_int("total_env_steps", c.total_env_steps);
  c.eval_every = kv.get_int("eval_every", c.eval_every);
  c.eval_rollouts = static_cast<int>(kv.get_int("eval_rollouts", c.eval_rollouts));
  c.eval_deterministic = kv.get_bool("eval_deterministic", c.eval_deterministic);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.hidden_units = static_cast<std::size_t>(kv.get_int("hidden_units", static_cast<long long>(c.hidden_units)));
  c.record_wall_clock = kv.get_bool("record_wall_clock", c.record_wall_clock);
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_key_values(const io::KeyValues& kv) {
  return from_key_values(kv, TrainConfig{});
}

std::map<std::string, std::string> to_key_values(const TrainConfig& c) {
  return {{"lr", io::format_double(c.lr)},
          {"gamma", io::format_double(c.gamma)},
          {"t_max", std::to_string(c.t_max)},
          {"entropy_coef", io::format_double(c.entropy_coef)},
          {"value_coef", io::format_double(c.value_coef)},
          {"max_grad_norm", io::format_double(c.max_grad_norm)},
          {"total_env_steps", std::to_string(c.total_env_steps)},
          {"eval_every", std::to_string(c.eval_every)},
          {"eval_rollouts", std::to_string(c.eval_rollouts)},
          {"eval_deterministic", c.eval_deterministic ? "true" : "false"},
          {"seed", std::to_string(c.seed)},
          {"hidden_units", std::to_string(c.hidden_units)},
          {"record_wall_clock", c.record_wall_clock ? "true" : "false"}};
}

RolloutSegment collect_segment(env::EnvCursor& cursor, const ActorNetwork& actor,
                               const CriticNetwork& critic, std::size_t head_id, int t_max,
                               Rng& rng) {
  RolloutSegment seg;
  seg.head_id = head_id;
  for (int t = 0; t < t_max; ++t) {
    const env::Observation obs = cursor.observation();
    const auto params = actor.policy(obs, head_id);
    auto action = policy::sample_action(params, rng);
    const double value = critic.value(obs, head_id);
    const auto result = cursor.step(action);
    seg.observations.push_back(obs);
    seg.actions.push_back(std::move(action));
    seg.rewards.push_back(result.reward);
    seg.values.push_back(value);
    if (result.done) {
      seg.done = true;
      seg.bootstrap_value = 0.0;
      cursor.reset();
      return seg;
    }
  }
  seg.bootstrap_value = critic.value(cursor.observation(), head_id);
  return seg;
}

AdvantagesReturns compute_advantages_returns(const RolloutSegment& segment, double gamma) {
  const std::size_t k = segment.size();
  AdvantagesReturns out;
  out.advantages.resize(k);
  out.returns.resize(k);
  double ret = segment.done ? 0.0 : segment.bootstrap_value;
  for (std::size_t t = k; t-- > 0;) {
    ret = segment.rewards[t] + gamma * ret;
    out.returns[t] = ret;
    out.advantages[t] = ret - segment.values[t];
  }
  return out;
}

namespace {

Tensor observation_batch(const RolloutSegment& segment) {
  const std::size_t k = segment.size();
  Tensor obs(env::kObsDim, k);
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t i = 0; i < env::kObsDim; ++i) obs(i, t) = segment.observations[t][i];
  }
  return obs;
}

void require_valid(const RolloutSegment& segment) {
  const std::size_t k = segment.size();
  if (k == 0 || segment.observations.size() != k || segment.actions.size() != k ||
      segment.values.size() != k) {
    throw DimensionError("rollout segment lists must be non-empty and of equal length");
  }
}

std::string describe(const LossStats& s) {
  std::ostringstream os;
  os << "policy_loss=" << s.policy_loss << " value_loss=" << s.value_loss
     << " entropy=" << s.entropy << " total=" << s.total;
  return os.str();
}

}  // namespace

FreezeMask FreezeMask::all_trainable(const ActorNetwork& actor, const CriticNetwork& critic) {
  return {std::vector<bool>(actor.net().parameters().size(), true),
          std::vector<bool>(critic.net().parameters().size(), true)};
}

namespace {

std::vector<bool> last_layer_mask(const policy::MultiHeadNet& net) {
  std::vector<bool> mask(net.trunk().num_layers() * 2, false);
  for (std::size_t h = 0; h < net.num_heads(); ++h) {
    const std::size_t n = net.head(h).num_layers();
    for (std::size_t i = 0; i < n; ++i) {
      const bool last = i + 1 == n;
      mask.push_back(last);
      mask.push_back(last);
    }
  }
  return mask;
}

}  // namespace

FreezeMask FreezeMask::last_layers_only(const ActorNetwork& actor, const CriticNetwork& critic) {
  return {last_layer_mask(actor.net()), last_layer_mask(critic.net())};
}

A2COptimizer::A2COptimizer(const ActorNetwork& actor, const CriticNetwork& critic)
    : actor(actor.net().parameters()), critic(critic.net().parameters()) {}

double a2c_loss(const ActorNetwork& actor, const CriticNetwork& critic,
                const RolloutSegment& segment, const TrainConfig& config) {
  require_valid(segment);
  const auto ar = compute_advantages_returns(segment, config.gamma);
  const Tensor obs = observation_batch(segment);
  const Tensor out = actor.net().predict(obs, segment.head_id);
  const Tensor values = critic.net().predict(obs, segment.head_id);
  const std::size_t d = actor.action_dim();
  double loss = 0.0;
  for (std::size_t t = 0; t < segment.size(); ++t) {
    policy::GaussianPolicyParams p;
    for (std::size_t i = 0; i < d; ++i) {
      p.mean.push_back(out(i, t));
      p.log_var.push_back(std::clamp(out(d + i, t), policy::kLogVarMin, policy::kLogVarMax));
    }
    loss += -policy::log_prob(p, segment.actions[t]) * ar.advantages[t] -
            config.entropy_coef * policy::entropy(p);
    const double err = ar.returns[t] - values[t];
    loss += config.value_coef * err * err;
  }
  return loss;
}

A2CGradients a2c_gradients(const ActorNetwork& actor, const CriticNetwork& critic,
                           const RolloutSegment& segment, const TrainConfig& config) {
  require_valid(segment);
  const std::size_t k = segment.size();
  const auto ar = compute_advantages_returns(segment, config.gamma);
  const Tensor obs = observation_batch(segment);

  A2CGradients out;
  const auto afwd = actor.forward(obs, segment.head_id);
  std::vector<GaussianGrad> pgrads;
  pgrads.reserve(k);
  for (std::size_t t = 0; t < k; ++t) {
    const auto& p = afwd.params[t];
    const double adv = ar.advantages[t];
    const double h = policy::entropy(p);
    out.stats.policy_loss += -policy::log_prob(p, segment.actions[t]) * adv;
    out.stats.entropy += h;
    auto g = policy::log_prob_grad(p, segment.actions[t]);
    const auto hg = policy::entropy_grad(p);
    for (std::size_t i = 0; i < p.dim(); ++i) {
      g.mean[i] = -adv * g.mean[i] - config.entropy_coef * hg.mean[i];
      g.log_var[i] = -adv * g.log_var[i] - config.entropy_coef * hg.log_var[i];
    }
    pgrads.push_back(std::move(g));
  }
  out.actor = actor.backward(afwd, pgrads);

  const auto cfwd = critic.net().forward(obs, segment.head_id);
  Tensor vgrad(1, k);
  for (std::size_t t = 0; t < k; ++t) {
    const double err = ar.returns[t] - cfwd.output[t];
    out.stats.value_loss += err * err;
    vgrad[t] = -2.0 * config.value_coef * err;
  }
  out.critic = critic.net().backward(cfwd, vgrad);

  out.stats.total = out.stats.policy_loss - config.entropy_coef * out.stats.entropy +
                    config.value_coef * out.stats.value_loss;
  return out;
}

namespace {

void masked_step(policy::MultiHeadNet& net, policy::MultiHeadNet::Grads& grads,
                 const std::vector<bool>* mask, double max_grad_norm, nn::RmsPropState& state,
                 double lr) {
  auto slots = net.gradient_slots(grads);
  if (mask != nullptr) {
    if (mask->size() != slots.size()) {
      throw DimensionError("freeze mask does not match the network's parameter list");
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!(*mask)[i]) slots[i] = nullptr;
    }
  }
  if (max_grad_norm > 0.0) nn::clip_global_norm(slots, max_grad_norm);
  std::vector<const Tensor*> cslots(slots.begin(), slots.end());
  auto params = net.parameters();
  nn::rmsprop_step(params, cslots, state, lr);
}

}  // namespace

LossStats a2c_update(ActorNetwork& actor, CriticNetwork& critic, const RolloutSegment& segment,
                     const TrainConfig& config, A2COptimizer& optimizer, const FreezeMask* mask) {
  auto grads = a2c_gradients(actor, critic, segment, config);
  if (!std::isfinite(grads.stats.total)) {
    throw NonFiniteError("a2c_update: non-finite loss (" + describe(grads.stats) + ")");
  }
  masked_step(actor.net(), grads.actor, mask ? &mask->actor : nullptr, config.max_grad_norm,
              optimizer.actor, config.lr);
  masked_step(critic.net(), grads.critic, mask ? &mask->critic : nullptr, config.max_grad_norm,
              optimizer.critic, config.lr);
  return grads.stats;
}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  return Rng::stream(seed, static_cast<std::uint64_t>(stream)).engine()();
}

std::vector<eval::CurveRow> run_a2c(ActorNetwork& actor, CriticNetwork& critic,
                                    const env::MorphologySpec& spec, const TrainConfig& config,
                                    const FreezeMask* mask) {
  config.validate();
  Rng rng(derive_seed(config.seed, Stream::Rollout));
  env::EnvCursor cursor(spec);
  A2COptimizer optimizer(actor, critic);
  const eval::EvalOptions eval_opts{config.eval_rollouts, derive_seed(config.seed, Stream::Eval),
                                    config.eval_deterministic};
  const auto start = std::chrono::steady_clock::now();

  std::vector<eval::CurveRow> curve;
  long long steps = 0;
  long long next_eval = config.eval_every;
  auto record = [&] {
    const auto report = eval::evaluate(actor, spec, 0, eval_opts);
    const double wall =
        config.record_wall_clock
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            : 0.0;
    curve.push_back({spec.name, steps, report.mean_return, report.std_return, wall});
  };

  while (steps < config.total_env_steps) {
    const int t_max =
        static_cast<int>(std::min<long long>(config.t_max, config.total_env_steps - steps));
    const auto segment = collect_segment(cursor, actor, critic, 0, t_max, rng);
    a2c_update(actor, critic, segment, config, optimizer, mask);
    steps += static_cast<long long>(segment.size());
    if (config.eval_every > 0 && steps >= next_eval) {
      record();
      while (next_eval <= steps) next_eval += config.eval_every;
    }
  }
  if (steps > 0 && (curve.empty() || curve.back().env_steps != steps)) record();
  return curve;
}

TrainResult train_single(std::string_view env_name, const TrainConfig& config) {
  config.validate();
  const auto spec = env::make_variant(env_name);
  Rng init(derive_seed(config.seed, Stream::Init));
  auto actor = ActorNetwork::make(env::kObsDim, env::kActionDim, 1, init, config.hidden_units);
  auto critic = CriticNetwork::make_single(env::kObsDim, init, config.hidden_units);

  TrainResult result;
  result.curve = run_a2c(actor, critic, spec, config);
  result.checkpoint.kind = "single";
  result.checkpoint.env_names = {spec.name};
  result.checkpoint.actor = std::move(actor);
  result.checkpoint.critic = std::move(critic);
  result.checkpoint.config = to_key_values(config);
  result.checkpoint.seed = config.seed;
  return result;
}

}  // namespace mtrl::a2c
