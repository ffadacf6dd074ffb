#include "mtrl/policy/networks.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "mtrl/errors.hpp"

namespace mtrl::policy {

using nn::Tensor;

namespace {

void check_layers(const nn::Mlp& mlp, std::size_t in_dim, std::span<const std::size_t> hidden,
                  std::size_t out_dim, bool has_output, const std::string& what) {
  const std::size_t expected = hidden.size() + (has_output ? 1 : 0);
  if (mlp.num_layers() != expected) {
    throw DimensionError(what + ": expected " + std::to_string(expected) + " layers, got " +
                         std::to_string(mlp.num_layers()));
  }
  std::size_t fan_in = in_dim;
  for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
    const auto& l = mlp.layers()[i];
    const bool last = has_output && i + 1 == mlp.num_layers();
    const std::size_t out = last ? out_dim : hidden[i];
    const auto act = last ? nn::Activation::Identity : nn::Activation::Tanh;
    if (l.in_dim() != fan_in || l.out_dim() != out || l.activation != act) {
      throw DimensionError(what + ": layer " + std::to_string(i) +
                           " does not match the architecture descriptor");
    }
    fan_in = out;
  }
}

}  // namespace

MultiHeadNet::MultiHeadNet(const NetArchitecture& arch, Rng& rng) : arch_(arch) {
  if (arch.num_heads == 0) throw std::invalid_argument("MultiHeadNet needs at least one head");
  if (!arch.trunk_hidden.empty()) {
    std::span<const std::size_t> hidden(arch.trunk_hidden);
    trunk_ = nn::Mlp::make(arch.in_dim, hidden.first(hidden.size() - 1), hidden.back(),
                           nn::Activation::Tanh, rng);
  }
  const std::size_t features = arch.trunk_hidden.empty() ? arch.in_dim : arch.trunk_hidden.back();
  heads_.reserve(arch.num_heads);
  for (std::size_t h = 0; h < arch.num_heads; ++h) {
    heads_.push_back(
        nn::Mlp::make(features, arch.head_hidden, arch.out_dim, nn::Activation::Identity, rng));
  }
}

MultiHeadNet::MultiHeadNet(const NetArchitecture& arch, nn::Mlp trunk, std::vector<nn::Mlp> heads)
    : arch_(arch), trunk_(std::move(trunk)), heads_(std::move(heads)) {
  if (arch.num_heads == 0 || heads_.size() != arch.num_heads) {
    throw DimensionError("MultiHeadNet: expected " + std::to_string(arch.num_heads) +
                         " heads, got " + std::to_string(heads_.size()));
  }
  check_layers(trunk_, arch.in_dim, arch.trunk_hidden, 0, false, "trunk");
  const std::size_t features = arch.trunk_hidden.empty() ? arch.in_dim : arch.trunk_hidden.back();
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    check_layers(heads_[h], features, arch.head_hidden, arch.out_dim, true,
                 "head " + std::to_string(h));
  }
}

void MultiHeadNet::check_head(std::size_t head_id) const {
  if (head_id >= heads_.size()) {
    throw std::out_of_range("head_id " + std::to_string(head_id) + " out of range (" +
                            std::to_string(heads_.size()) + " heads)");
  }
}

MultiHeadNet::Forward MultiHeadNet::forward(const Tensor& obs, std::size_t head_id) const {
  check_head(head_id);
  Forward f;
  f.head_id = head_id;
  auto t = trunk_.forward(obs);
  f.trunk = std::move(t.cache);
  auto h = heads_[head_id].forward(t.output);
  f.head = std::move(h.cache);
  f.output = std::move(h.output);
  return f;
}

Tensor MultiHeadNet::predict(const Tensor& obs, std::size_t head_id) const {
  check_head(head_id);
  return heads_[head_id].predict(trunk_.predict(obs));
}

MultiHeadNet::Grads MultiHeadNet::backward(const Forward& fwd, const Tensor& grad_output) const {
  check_head(fwd.head_id);
  Grads g;
  g.head_id = fwd.head_id;
  auto hb = heads_[fwd.head_id].backward(fwd.head, grad_output);
  g.head = std::move(hb.grads);
  auto tb = trunk_.backward(fwd.trunk, hb.grad_input);
  g.trunk = std::move(tb.grads);
  g.grad_input = std::move(tb.grad_input);
  return g;
}

std::vector<Tensor*> MultiHeadNet::parameters() {
  auto out = trunk_.parameters();
  for (auto& h : heads_) {
    auto p = h.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const Tensor*> MultiHeadNet::parameters() const {
  auto out = trunk_.parameters();
  for (const auto& h : heads_) {
    auto p = h.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::string> MultiHeadNet::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < trunk_.num_layers(); ++i) {
    names.push_back("trunk." + std::to_string(i) + ".weight");
    names.push_back("trunk." + std::to_string(i) + ".bias");
  }
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    for (std::size_t i = 0; i < heads_[h].num_layers(); ++i) {
      const std::string base = "head." + std::to_string(h) + "." + std::to_string(i);
      names.push_back(base + ".weight");
      names.push_back(base + ".bias");
    }
  }
  return names;
}

std::vector<const Tensor*> MultiHeadNet::gradient_slots(const Grads& grads) const {
  auto out = grads.trunk.tensors();
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    if (h == grads.head_id) {
      auto t = grads.head.tensors();
      out.insert(out.end(), t.begin(), t.end());
    } else {
      out.insert(out.end(), heads_[h].num_layers() * 2, nullptr);
    }
  }
  return out;
}

std::vector<Tensor*> MultiHeadNet::gradient_slots(Grads& grads) const {
  auto out = grads.trunk.tensors();
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    if (h == grads.head_id) {
      auto t = grads.head.tensors();
      out.insert(out.end(), t.begin(), t.end());
    } else {
      out.insert(out.end(), heads_[h].num_layers() * 2, nullptr);
    }
  }
  return out;
}

bool MultiHeadNet::operator==(const MultiHeadNet& other) const {
  return arch_ == other.arch_ && trunk_ == other.trunk_ && heads_ == other.heads_;
}

ActorNetwork::ActorNetwork(MultiHeadNet net) : net_(std::move(net)) {
  if (net_.architecture().out_dim % 2 != 0 || net_.architecture().out_dim == 0) {
    throw DimensionError("actor head output must be 2 * action_dim");
  }
}

ActorNetwork ActorNetwork::make(std::size_t obs_dim, std::size_t action_dim,
                                std::size_t num_heads, Rng& rng, std::size_t hidden) {
  NetArchitecture arch{obs_dim, {hidden, hidden}, {}, 2 * action_dim, num_heads};
  return ActorNetwork(MultiHeadNet(arch, rng));
}

ActorNetwork::BatchForward ActorNetwork::forward(const Tensor& obs, std::size_t head_id) const {
  BatchForward f;
  f.net = net_.forward(obs, head_id);
  const std::size_t d = action_dim();
  const Tensor& out = f.net.output;
  f.params.resize(out.cols());
  for (std::size_t c = 0; c < out.cols(); ++c) {
    auto& p = f.params[c];
    p.mean.resize(d);
    p.log_var.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      p.mean[i] = out(i, c);
      p.log_var[i] = std::clamp(out(d + i, c), kLogVarMin, kLogVarMax);
    }
  }
  return f;
}

GaussianPolicyParams ActorNetwork::policy(std::span<const double> obs, std::size_t head_id) const {
  const Tensor out = net_.predict(Tensor::column(obs), head_id);
  const std::size_t d = action_dim();
  GaussianPolicyParams p;
  p.mean.resize(d);
  p.log_var.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    p.mean[i] = out[i];
    p.log_var[i] = std::clamp(out[d + i], kLogVarMin, kLogVarMax);
  }
  return p;
}

MultiHeadNet::Grads ActorNetwork::backward(const BatchForward& fwd,
                                           std::span<const GaussianGrad> grads) const {
  const Tensor& out = fwd.net.output;
  if (grads.size() != out.cols()) {
    throw DimensionError("actor backward: " + std::to_string(grads.size()) +
                         " gradients for a batch of " + std::to_string(out.cols()));
  }
  const std::size_t d = action_dim();
  Tensor g(out.rows(), out.cols());
  for (std::size_t c = 0; c < out.cols(); ++c) {
    for (std::size_t i = 0; i < d; ++i) {
      g(i, c) = grads[c].mean[i];
      const double raw = out(d + i, c);
      const bool clamped = raw < kLogVarMin || raw > kLogVarMax;
      g(d + i, c) = clamped ? 0.0 : grads[c].log_var[i];
    }
  }
  return net_.backward(fwd.net, g);
}

CriticNetwork::CriticNetwork(MultiHeadNet net) : net_(std::move(net)) {
  if (net_.architecture().out_dim != 1) throw DimensionError("critic heads must output a scalar");
}

CriticNetwork CriticNetwork::make_single(std::size_t obs_dim, Rng& rng, std::size_t hidden) {
  NetArchitecture arch{obs_dim, {hidden, hidden, hidden}, {}, 1, 1};
  return CriticNetwork(MultiHeadNet(arch, rng));
}

CriticNetwork CriticNetwork::make_multitask(std::size_t obs_dim, std::size_t num_heads, Rng& rng,
                                            std::size_t hidden) {
  NetArchitecture arch{obs_dim, {hidden}, {hidden, hidden}, 1, num_heads};
  return CriticNetwork(MultiHeadNet(arch, rng));
}

double CriticNetwork::value(std::span<const double> obs, std::size_t head_id) const {
  return net_.predict(Tensor::column(obs), head_id)[0];
}

}  // namespace mtrl::policy
