#pragma once

#include <span>
#include <vector>

#include "mtrl/rng.hpp"

namespace mtrl::policy {

/// Diagonal Gaussian N(mean, diag(exp(log_var))).
struct GaussianPolicyParams {
  std::vector<double> mean;
  std::vector<double> log_var;

  std::size_t dim() const { return mean.size(); }
  bool operator==(const GaussianPolicyParams&) const = default;
};

/// d/dmean and d/dlog_var of a scalar function of GaussianPolicyParams.
struct GaussianGrad {
  std::vector<double> mean;
  std::vector<double> log_var;

  explicit GaussianGrad(std::size_t d = 0) : mean(d, 0.0), log_var(d, 0.0) {}
};

/// mean + exp(log_var / 2) * z, z ~ N(0, I).
std::vector<double> sample_action(const GaussianPolicyParams& params, Rng& rng);

/// -1/2 sum_i [(a_i - mu_i)^2 exp(-log_var_i) + log_var_i + log(2 pi)]
double log_prob(const GaussianPolicyParams& params, std::span<const double> action);
GaussianGrad log_prob_grad(const GaussianPolicyParams& params, std::span<const double> action);

/// 1/2 sum_i (log(2 pi e) + log_var_i)
double entropy(const GaussianPolicyParams& params);
GaussianGrad entropy_grad(const GaussianPolicyParams& params);

/// Distillation loss between a teacher T and student S:
///
///   1/2 [ sum_i (lv_T - lv_S) - d + sum_i exp(lv_S - lv_T) ]
///     + 1/2 sum_i (mu_T - mu_S)^2 exp(-lv_T)
///
/// Note the argument convention: with T written first this expression is the
/// standard KL(S || T), i.e. E_{a~S}[log p_S(a) - log p_T(a)].
/// Throws DimensionError if the dimensions differ.
double kl_diag_gaussian(const GaussianPolicyParams& teacher, const GaussianPolicyParams& student);

/// Gradient of kl_diag_gaussian with respect to the student parameters.
GaussianGrad kl_diag_gaussian_grad(const GaussianPolicyParams& teacher,
                                   const GaussianPolicyParams& student);

}  // namespace mtrl::policy
