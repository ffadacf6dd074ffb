#include "mtrl/nn/mlp.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "mtrl/errors.hpp"

namespace mtrl::nn {

std::vector<const Tensor*> MlpGrads::tensors() const {
  std::vector<const Tensor*> out;
  out.reserve(layers.size() * 2);
  for (const auto& l : layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Tensor*> MlpGrads::tensors() {
  std::vector<Tensor*> out;
  out.reserve(layers.size() * 2);
  for (auto& l : layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::uint64_t Mlp::next_uid() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)), uid_(next_uid()) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.rows() != l.out_dim() || l.bias.cols() != 1) {
      throw DimensionError("layer " + std::to_string(i) + ": bias shape " +
                           std::to_string(l.bias.rows()) + "x" + std::to_string(l.bias.cols()) +
                           " does not match out_dim " + std::to_string(l.out_dim()));
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw DimensionError("layer " + std::to_string(i) + ": in_dim " +
                           std::to_string(l.in_dim()) + " does not chain with previous out_dim " +
                           std::to_string(layers_[i - 1].out_dim()));
    }
  }
}

Mlp::Mlp(const Mlp& other) : layers_(other.layers_), uid_(next_uid()), version_(other.version_) {}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    layers_ = other.layers_;
    ++version_;
  }
  return *this;
}

Mlp Mlp::make(std::size_t in_dim, std::span<const std::size_t> hidden, std::size_t out_dim,
              Activation final_activation, Rng& rng) {
  std::vector<DenseLayer> layers;
  std::size_t fan_in = in_dim;
  auto add = [&](std::size_t out, Activation act) {
    DenseLayer l{Tensor(out, fan_in), Tensor(out, 1), act};
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& w : l.weights.values()) w = rng.uniform(-bound, bound);
    layers.push_back(std::move(l));
    fan_in = out;
  };
  for (std::size_t h : hidden) add(h, Activation::Tanh);
  add(out_dim, final_activation);
  return Mlp(std::move(layers));
}

std::size_t Mlp::in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
std::size_t Mlp::out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::vector<DenseLayer>& Mlp::mutable_layers() {
  ++version_;
  return layers_;
}

namespace {

void affine(const DenseLayer& layer, const Tensor& x, Tensor& pre) {
  const std::size_t out = layer.out_dim();
  const std::size_t in = layer.in_dim();
  const std::size_t batch = x.cols();
  pre = Tensor(out, batch);
  const double* w = layer.weights.values().data();
  const double* xv = x.values().data();
  double* p = pre.values().data();
  for (std::size_t o = 0; o < out; ++o) {
    const double b = layer.bias[o];
    double* prow = p + o * batch;
    for (std::size_t c = 0; c < batch; ++c) prow[c] = b;
    const double* wrow = w + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      const double wi = wrow[i];
      const double* xrow = xv + i * batch;
      for (std::size_t c = 0; c < batch; ++c) prow[c] += wi * xrow[c];
    }
  }
}

void activate(Activation act, const Tensor& pre, Tensor& post) {
  post = pre;
  if (act == Activation::Tanh) {
    for (auto& v : post.values()) v = std::tanh(v);
  }
}

}  // namespace

ForwardResult Mlp::forward(const Tensor& input) const {
  ForwardResult result;
  auto& cache = result.cache;
  cache.owner = uid_;
  cache.version = version_;
  cache.inputs.reserve(layers_.size());
  cache.pre.resize(layers_.size());
  cache.post.resize(layers_.size());
  const Tensor* x = &input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (x->rows() != layer.in_dim()) {
      throw DimensionError("mlp_forward: layer " + std::to_string(i) + " expects in_dim " +
                           std::to_string(layer.in_dim()) + ", got " + std::to_string(x->rows()));
    }
    cache.inputs.push_back(*x);
    affine(layer, *x, cache.pre[i]);
    activate(layer.activation, cache.pre[i], cache.post[i]);
    x = &cache.post[i];
  }
  result.output = layers_.empty() ? input : cache.post.back();
  return result;
}

Tensor Mlp::predict(const Tensor& input) const {
  Tensor x = input;
  Tensor pre;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (x.rows() != layer.in_dim()) {
      throw DimensionError("mlp_forward: layer " + std::to_string(i) + " expects in_dim " +
                           std::to_string(layer.in_dim()) + ", got " + std::to_string(x.rows()));
    }
    affine(layer, x, pre);
    activate(layer.activation, pre, x);
  }
  return x;
}

BackwardResult Mlp::backward(const ForwardCache& cache, const Tensor& grad_output) const {
  if (cache.owner != uid_ || cache.version != version_) {
    throw std::logic_error("mlp_backward: forward cache is stale or belongs to another network");
  }
  if (cache.pre.size() != layers_.size()) {
    throw DimensionError("mlp_backward: cache has " + std::to_string(cache.pre.size()) +
                         " layers, network has " + std::to_string(layers_.size()));
  }
  BackwardResult result;
  result.grads.layers.resize(layers_.size());
  if (layers_.empty()) {
    result.grad_input = grad_output;
    return result;
  }
  if (!grad_output.same_shape(cache.post.back())) {
    throw DimensionError("mlp_backward: grad_output shape does not match forward output");
  }

  Tensor delta = grad_output;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& layer = layers_[li];
    const std::size_t out = layer.out_dim();
    const std::size_t in = layer.in_dim();
    const std::size_t batch = delta.cols();
    if (layer.activation == Activation::Tanh) {
      const auto post = cache.post[li].values();
      auto d = delta.values();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] *= 1.0 - post[k] * post[k];
    }
    const Tensor& x = cache.inputs[li];
    LayerGrads& g = result.grads.layers[li];
    g.weights = Tensor(out, in);
    g.bias = Tensor(out, 1);
    Tensor grad_in(in, batch);
    for (std::size_t o = 0; o < out; ++o) {
      const double* drow = &delta(o, 0);
      double bsum = 0.0;
      for (std::size_t c = 0; c < batch; ++c) bsum += drow[c];
      g.bias[o] = bsum;
      for (std::size_t i = 0; i < in; ++i) {
        const double* xrow = &x(i, 0);
        double s = 0.0;
        for (std::size_t c = 0; c < batch; ++c) s += drow[c] * xrow[c];
        g.weights(o, i) = s;
        const double w = layer.weights(o, i);
        double* girow = &grad_in(i, 0);
        for (std::size_t c = 0; c < batch; ++c) girow[c] += w * drow[c];
      }
    }
    delta = std::move(grad_in);
  }
  result.grad_input = std::move(delta);
  return result;
}

std::vector<Tensor*> Mlp::parameters() {
  ++version_;
  std::vector<Tensor*> out;
  out.reserve(layers_.size() * 2);
  for (auto& l : layers_) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  out.reserve(layers_.size() * 2);
  for (const auto& l : layers_) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads g;
  g.layers.reserve(layers_.size());
  for (const auto& l : layers_) {
    g.layers.push_back({Tensor(l.weights.rows(), l.weights.cols()), Tensor(l.bias.rows(), 1)});
  }
  return g;
}

bool Mlp::operator==(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.activation != b.activation || !(a.weights == b.weights) || !(a.bias == b.bias)) {
      return false;
    }
  }
  return true;
}

}  // namespace mtrl::nn
