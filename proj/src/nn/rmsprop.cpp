#include "mtrl/nn/rmsprop.hpp"

#include <cmath>
#include <string>

#include "mtrl/errors.hpp"

namespace mtrl::nn {

RmsPropState::RmsPropState(std::span<const Tensor* const> params, double decay_, double epsilon_)
    : decay(decay_), epsilon(epsilon_) {
  sq_avg.reserve(params.size());
  for (const Tensor* p : params) sq_avg.emplace_back(p->rows(), p->cols());
}

void rmsprop_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                  RmsPropState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.sq_avg.size()) {
    throw DimensionError("rmsprop_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " +
                         std::to_string(state.sq_avg.size()) + " state tensors");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i] == nullptr) continue;
    if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(state.sq_avg[i])) {
      throw DimensionError("rmsprop_step: shape mismatch at parameter tensor " + std::to_string(i));
    }
    if (!grads[i]->all_finite()) {
      throw NonFiniteError("rmsprop_step: non-finite gradient in parameter tensor " +
                           std::to_string(i));
    }
  }
  const double keep = state.decay;
  const double mix = 1.0 - state.decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i] == nullptr) continue;
    auto p = params[i]->values();
    auto g = grads[i]->values();
    auto s = state.sq_avg[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      s[k] = keep * s[k] + mix * g[k] * g[k];
      p[k] -= lr * g[k] / (std::sqrt(s[k]) + state.epsilon);
    }
  }
}

double clip_global_norm(std::span<Tensor* const> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor* g : grads) {
    if (g == nullptr) continue;
    for (double v : g->values()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor* g : grads) {
      if (g == nullptr) continue;
      for (double& v : g->values()) v *= scale;
    }
  }
  return norm;
}

}  // namespace mtrl::nn
