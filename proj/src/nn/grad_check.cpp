#include "mtrl/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mtrl/errors.hpp"

namespace mtrl::nn {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

std::vector<Tensor> numeric_gradient(std::span<Tensor* const> params,
                                     const std::function<double()>& loss, double h) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (Tensor* p : params) {
    Tensor g(p->rows(), p->cols());
    auto values = p->values();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + h;
      const double up = loss();
      values[k] = saved - h;
      const double down = loss();
      values[k] = saved;
      g[k] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double max_relative_error(std::span<const Tensor* const> analytic,
                          std::span<const Tensor> numeric) {
  if (analytic.size() != numeric.size()) {
    throw DimensionError("max_relative_error: tensor count mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const auto n = numeric[i].values();
    for (std::size_t k = 0; k < n.size(); ++k) {
      const double a = analytic[i] == nullptr ? 0.0 : (*analytic[i])[k];
      worst = std::max(worst, relative_error(a, n[k]));
    }
  }
  return worst;
}

double gradient_check(Mlp& mlp, const Tensor& input, const OutputLoss& loss_fn, double h) {
  auto fwd = mlp.forward(input);
  auto [loss, grad_out] = loss_fn(fwd.output);
  auto back = mlp.backward(fwd.cache, grad_out);
  const auto analytic = std::as_const(back.grads).tensors();
  auto params = mlp.parameters();
  const auto numeric =
      numeric_gradient(params, [&] { return loss_fn(mlp.predict(input)).first; }, h);
  return max_relative_error(analytic, numeric);
}

}  // namespace mtrl::nn
