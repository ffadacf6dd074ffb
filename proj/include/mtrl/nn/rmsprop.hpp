#pragma once

#include <span>
#include <vector>

#include "mtrl/nn/tensor.hpp"

namespace mtrl::nn {

struct RmsPropState {
  std::vector<Tensor> sq_avg;
  double decay = 0.99;
  double epsilon = 1e-5;

  RmsPropState() = default;
  /// Zero-initialised second-moment buffers shaped like `params`.
  explicit RmsPropState(std::span<const Tensor* const> params, double decay = 0.99,
                        double epsilon = 1e-5);
};

/// One RMSprop step:
///   sq_avg <- decay * sq_avg + (1 - decay) * g^2
///   p      <- p - lr * g / (sqrt(sq_avg) + epsilon)
///
/// A null entry in `grads` skips that tensor entirely (parameter and its
/// sq_avg untouched), which is how frozen tensors and inactive heads are handled.
/// Throws NonFiniteError before touching anything if a gradient is NaN/Inf.
void rmsprop_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                  RmsPropState& state, double lr);

/// Rescales grads in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Tensor* const> grads, double max_norm);

}  // namespace mtrl::nn
