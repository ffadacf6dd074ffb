#include "mtrl/eval/evaluate.hpp"

#include <cmath>

namespace mtrl::eval {

EvalReport summarize(std::string env_name, std::vector<double> returns) {
  EvalReport r;
  r.env_name = std::move(env_name);
  r.n_rollouts = static_cast<int>(returns.size());
  if (!returns.empty()) {
    // Offset by the first return so identical returns give that value exactly.
    const double shift = returns.front();
    double sum = 0.0;
    for (double x : returns) sum += x - shift;
    r.mean_return = shift + sum / static_cast<double>(returns.size());
  }
  if (returns.size() >= 2) {
    double ss = 0.0;
    for (double x : returns) ss += (x - r.mean_return) * (x - r.mean_return);
    r.std_return = std::sqrt(ss / static_cast<double>(returns.size() - 1));
    r.std_defined = true;
  }
  r.per_rollout_returns = std::move(returns);
  return r;
}

EvalReport evaluate(const policy::ActorNetwork& actor, const env::MorphologySpec& spec,
                    std::size_t head_id, const EvalOptions& options) {
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(std::max(options.n_rollouts, 0)));
  for (int i = 0; i < options.n_rollouts; ++i) {
    Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(i));
    env::EnvCursor cursor(spec);
    double total = 0.0;
    bool done = false;
    while (!done) {
      const auto params = actor.policy(cursor.observation(), head_id);
      const auto action = options.deterministic ? params.mean : policy::sample_action(params, rng);
      const auto r = cursor.step(action);
      total += r.reward;
      done = r.done;
    }
    returns.push_back(total);
  }
  return summarize(spec.name, std::move(returns));
}

EvalReport evaluate(const policy::ActorNetwork& actor, std::string_view env_name,
                    std::size_t head_id, const EvalOptions& options) {
  return evaluate(actor, env::make_variant(env_name), head_id, options);
}

}  // namespace mtrl::eval
