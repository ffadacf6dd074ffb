#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtrl/nn/mlp.hpp"
#include "mtrl/policy/gaussian.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::policy {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 4.0;
inline constexpr std::size_t kHiddenUnits = 64;

/// Layer sizes of a trunk + heads network. Trunk layers and hidden head layers
/// use tanh; the final head layer is linear.
struct NetArchitecture {
  std::size_t in_dim = 0;
  std::vector<std::size_t> trunk_hidden;
  std::vector<std::size_t> head_hidden;
  std::size_t out_dim = 0;
  std::size_t num_heads = 1;

  bool operator==(const NetArchitecture&) const = default;
};

/// Shared trunk feeding n independent heads.
class MultiHeadNet {
 public:
  struct Forward {
    nn::Tensor output;
    nn::ForwardCache trunk;
    nn::ForwardCache head;
    std::size_t head_id = 0;
  };

  /// Only head `head_id` has a gradient; the others are untouched by construction.
  struct Grads {
    nn::MlpGrads trunk;
    nn::MlpGrads head;
    std::size_t head_id = 0;
    nn::Tensor grad_input;
  };

  MultiHeadNet() = default;
  MultiHeadNet(const NetArchitecture& arch, Rng& rng);
  /// Adopts existing layers; throws DimensionError if they do not match `arch`.
  MultiHeadNet(const NetArchitecture& arch, nn::Mlp trunk, std::vector<nn::Mlp> heads);

  const NetArchitecture& architecture() const { return arch_; }
  std::size_t num_heads() const { return heads_.size(); }
  const nn::Mlp& trunk() const { return trunk_; }
  const nn::Mlp& head(std::size_t i) const { return heads_.at(i); }

  /// `obs` is (in_dim x batch). Throws std::out_of_range for a bad head id.
  Forward forward(const nn::Tensor& obs, std::size_t head_id) const;
  nn::Tensor predict(const nn::Tensor& obs, std::size_t head_id) const;
  Grads backward(const Forward& fwd, const nn::Tensor& grad_output) const;

  /// Trunk tensors first, then each head in order; weight and bias per layer.
  std::vector<nn::Tensor*> parameters();
  std::vector<const nn::Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
  /// Gradient tensors aligned with parameters(); null for heads other than grads.head_id.
  std::vector<const nn::Tensor*> gradient_slots(const Grads& grads) const;
  std::vector<nn::Tensor*> gradient_slots(Grads& grads) const;

  bool operator==(const MultiHeadNet& other) const;

 private:
  void check_head(std::size_t head_id) const;

  NetArchitecture arch_;
  nn::Mlp trunk_;
  std::vector<nn::Mlp> heads_;
};

/// Diagonal-Gaussian actor: each head emits (mean || log_var) for its environment.
class ActorNetwork {
 public:
  struct BatchForward {
    MultiHeadNet::Forward net;
    std::vector<GaussianPolicyParams> params;  // clamped log_var, one per column
  };

  ActorNetwork() = default;
  explicit ActorNetwork(MultiHeadNet net);

  /// Trunk of two 64-unit tanh layers, `num_heads` linear heads of size 2 * action_dim.
  static ActorNetwork make(std::size_t obs_dim, std::size_t action_dim, std::size_t num_heads,
                           Rng& rng, std::size_t hidden = kHiddenUnits);

  std::size_t action_dim() const { return net_.architecture().out_dim / 2; }
  std::size_t num_heads() const { return net_.num_heads(); }

  GaussianPolicyParams policy(std::span<const double> obs, std::size_t head_id) const;
  BatchForward forward(const nn::Tensor& obs, std::size_t head_id) const;
  /// Backpropagates per-column gradients of the Gaussian parameters. The
  /// log_var clamp passes no gradient where it is active.
  MultiHeadNet::Grads backward(const BatchForward& fwd, std::span<const GaussianGrad> grads) const;

  MultiHeadNet& net() { return net_; }
  const MultiHeadNet& net() const { return net_; }

  bool operator==(const ActorNetwork& other) const { return net_ == other.net_; }

 private:
  MultiHeadNet net_;
};

/// Scalar value estimator, one output per head.
class CriticNetwork {
 public:
  CriticNetwork() = default;
  explicit CriticNetwork(MultiHeadNet net);

  /// Three 64-unit tanh layers and a linear output.
  static CriticNetwork make_single(std::size_t obs_dim, Rng& rng,
                                   std::size_t hidden = kHiddenUnits);
  /// One shared 64-unit layer; each head holds the two remaining hidden layers and the output.
  static CriticNetwork make_multitask(std::size_t obs_dim, std::size_t num_heads, Rng& rng,
                                      std::size_t hidden = kHiddenUnits);

  std::size_t num_heads() const { return net_.num_heads(); }
  double value(std::span<const double> obs, std::size_t head_id) const;

  MultiHeadNet& net() { return net_; }
  const MultiHeadNet& net() const { return net_; }

  bool operator==(const CriticNetwork& other) const { return net_ == other.net_; }

 private:
  MultiHeadNet net_;
};

}  // namespace mtrl::policy
