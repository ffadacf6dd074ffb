#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mtrl/nn/tensor.hpp"
#include "mtrl/rng.hpp"

namespace mtrl::nn {

enum class Activation { Tanh, Identity };

struct DenseLayer {
  Tensor weights;  // out_dim x in_dim
  Tensor bias;     // out_dim x 1
  Activation activation = Activation::Identity;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
};

struct LayerGrads {
  Tensor weights;
  Tensor bias;
};

struct MlpGrads {
  std::vector<LayerGrads> layers;

  /// Flattened in the same order as Mlp::parameters().
  std::vector<const Tensor*> tensors() const;
  std::vector<Tensor*> tensors();
};

/// Per-layer values recorded by a forward pass, consumed by backward().
struct ForwardCache {
  std::uint64_t owner = 0;
  std::uint64_t version = 0;
  std::vector<Tensor> inputs;  // input to each layer
  std::vector<Tensor> pre;     // W x + b
  std::vector<Tensor> post;    // activation(pre)
};

struct ForwardResult {
  Tensor output;
  ForwardCache cache;
};

struct BackwardResult {
  MlpGrads grads;
  Tensor grad_input;
};

/// Chain of dense layers.
///
/// Complete networks end in an Identity layer. Trunk segments of multi-head
/// networks end in Tanh, which is why the constructor only checks that layer
/// dimensions chain.
class Mlp {
 public:
  Mlp() : uid_(next_uid()) {}
  explicit Mlp(std::vector<DenseLayer> layers);

  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  /// Layer sizes in_dim -> hidden... -> out_dim. Hidden layers use tanh; the
  /// last layer uses `final_activation`. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), bias 0.
  static Mlp make(std::size_t in_dim, std::span<const std::size_t> hidden, std::size_t out_dim,
                  Activation final_activation, Rng& rng);

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  /// Mutable access invalidates outstanding forward caches.
  std::vector<DenseLayer>& mutable_layers();

  /// `input` is (in_dim x batch).
  ForwardResult forward(const Tensor& input) const;
  /// Output only, no cache.
  Tensor predict(const Tensor& input) const;
  BackwardResult backward(const ForwardCache& cache, const Tensor& grad_output) const;

  /// weights, bias for each layer in order. Invalidates forward caches.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;

  MlpGrads zero_grads() const;

  bool operator==(const Mlp& other) const;

 private:
  static std::uint64_t next_uid();

  std::vector<DenseLayer> layers_;
  std::uint64_t uid_;
  std::uint64_t version_ = 0;
};

}  // namespace mtrl::nn
