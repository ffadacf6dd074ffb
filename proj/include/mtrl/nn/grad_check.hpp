#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mtrl/nn/mlp.hpp"

namespace mtrl::nn {

/// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

/// Central differences of `loss` with respect to every element of `params`.
/// The tensors are perturbed in place and restored bit-for-bit.
std::vector<Tensor> numeric_gradient(std::span<Tensor* const> params,
                                     const std::function<double()>& loss, double h = 1e-5);

/// Largest relative_error over all elements. Null analytic entries count as zero gradients.
double max_relative_error(std::span<const Tensor* const> analytic, std::span<const Tensor> numeric);

/// Scalar loss of a network output: returns (loss, dloss/doutput).
using OutputLoss = std::function<std::pair<double, Tensor>(const Tensor& output)>;

/// Compares mlp.backward() against central differences for `loss_fn` at `input`.
double gradient_check(Mlp& mlp, const Tensor& input, const OutputLoss& loss_fn, double h = 1e-5);

}  // namespace mtrl::nn
