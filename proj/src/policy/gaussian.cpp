#include "mtrl/policy/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mtrl/errors.hpp"

namespace mtrl::policy {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(got) +
                         " does not match " + std::to_string(expected));
  }
}

}  // namespace

std::vector<double> sample_action(const GaussianPolicyParams& params, Rng& rng) {
  std::vector<double> a(params.dim());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = params.mean[i] + std::exp(0.5 * params.log_var[i]) * rng.normal();
  }
  return a;
}

double log_prob(const GaussianPolicyParams& params, std::span<const double> action) {
  require_dim(params.dim(), action.size(), "log_prob");
  double s = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double diff = action[i] - params.mean[i];
    s += diff * diff * std::exp(-params.log_var[i]) + params.log_var[i] + kLog2Pi;
  }
  return -0.5 * s;
}

GaussianGrad log_prob_grad(const GaussianPolicyParams& params, std::span<const double> action) {
  require_dim(params.dim(), action.size(), "log_prob_grad");
  GaussianGrad g(params.dim());
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double diff = action[i] - params.mean[i];
    const double inv_var = std::exp(-params.log_var[i]);
    g.mean[i] = diff * inv_var;
    g.log_var[i] = 0.5 * (diff * diff * inv_var - 1.0);
  }
  return g;
}

double entropy(const GaussianPolicyParams& params) {
  double s = 0.0;
  for (double lv : params.log_var) s += kLog2Pi + 1.0 + lv;
  return 0.5 * s;
}

GaussianGrad entropy_grad(const GaussianPolicyParams& params) {
  GaussianGrad g(params.dim());
  for (auto& v : g.log_var) v = 0.5;
  return g;
}

double kl_diag_gaussian(const GaussianPolicyParams& teacher, const GaussianPolicyParams& student) {
  require_dim(teacher.dim(), student.dim(), "kl_diag_gaussian");
  const std::size_t d = teacher.dim();
  double log_det_ratio = 0.0;
  double trace = 0.0;
  double mahalanobis = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    log_det_ratio += teacher.log_var[i] - student.log_var[i];
    trace += std::exp(student.log_var[i] - teacher.log_var[i]);
    const double diff = teacher.mean[i] - student.mean[i];
    mahalanobis += diff * diff * std::exp(-teacher.log_var[i]);
  }
  return 0.5 * (log_det_ratio - static_cast<double>(d) + trace) + 0.5 * mahalanobis;
}

GaussianGrad kl_diag_gaussian_grad(const GaussianPolicyParams& teacher,
                                   const GaussianPolicyParams& student) {
  require_dim(teacher.dim(), student.dim(), "kl_diag_gaussian_grad");
  GaussianGrad g(teacher.dim());
  for (std::size_t i = 0; i < teacher.dim(); ++i) {
    g.mean[i] = -(teacher.mean[i] - student.mean[i]) * std::exp(-teacher.log_var[i]);
    g.log_var[i] = 0.5 * (std::exp(student.log_var[i] - teacher.log_var[i]) - 1.0);
  }
  return g;
}

}  // namespace mtrl::policy
