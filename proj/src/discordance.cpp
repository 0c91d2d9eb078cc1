#include "catelab/discordance.hpp"

#include <cmath>

#include "catelab/errors.hpp"
#include "catelab/stats.hpp"

namespace catelab {

namespace {

// beta4 + beta5 * rho * sigma_z / sigma_x, the slope of the conditional
// average effect in x. Heterogeneity with respect to X vanishes exactly when
// this is zero.
double cate_slope(const LinearInteractionModel& model,
                  const GaussianPairParams& params) {
  return model.beta4 +
         model.beta5 * params.rho * (params.sigma_z / params.sigma_x);
}

}  // namespace

double cate_ite_covariance(const LinearInteractionModel& model,
                           const GaussianPairParams& params) {
  model.validate();
  params.validate();
  const double s = cate_slope(model, params);
  return params.sigma_x * params.sigma_x * s * s;
}

double ite_variance(const LinearInteractionModel& model,
                    const GaussianPairParams& params) {
  model.validate();
  params.validate();
  const double t = model.beta4 * params.sigma_x +
                   model.beta5 * params.rho * params.sigma_z;
  const double u = model.beta5 * params.sigma_z;
  return t * t + u * u * (1.0 - params.rho * params.rho);
}

double cate_ite_correlation(const LinearInteractionModel& model,
                            const GaussianPairParams& params) {
  const double var_ite = ite_variance(model, params);
  if (!(var_ite > 0.0)) {
    throw estimation_error(
        "cate_ite_correlation: the unit-level effect has zero variance, "
        "correlation is undefined");
  }
  const double numerator = std::abs(params.sigma_x * cate_slope(model, params));
  return numerator / std::sqrt(var_ite);
}

EmpiricalDiscordance empirical_discordance(
    std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 2) {
    throw invalid_parameter("empirical_discordance: need at least 2 pairs");
  }

  EmpiricalDiscordance result;
  result.n = pairs.size();

  const double n = static_cast<double>(pairs.size());
  double sum_a = 0.0, sum_b = 0.0;
  std::size_t disagreements = 0;
  for (const auto& [a, b] : pairs) {
    sum_a += a;
    sum_b += b;
    if ((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) ++disagreements;
  }
  result.sign_disagreement_rate = static_cast<double>(disagreements) / n;

  const double ma = sum_a / n;
  const double mb = sum_b / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (const auto& [a, b] : pairs) {
    saa += (a - ma) * (a - ma);
    sbb += (b - mb) * (b - mb);
    sab += (a - ma) * (b - mb);
  }
  if (saa > 0.0 && sbb > 0.0) {
    result.correlation = (sab / n) / (std::sqrt(saa / n) * std::sqrt(sbb / n));
  }
  return result;
}

double cate_mse(std::span<const double> estimated,
                std::span<const double> truth) {
  if (estimated.size() != truth.size()) {
    throw invalid_parameter("cate_mse: length mismatch (" +
                            std::to_string(estimated.size()) + " vs " +
                            std::to_string(truth.size()) + ")");
  }
  if (estimated.empty()) {
    throw invalid_parameter("cate_mse: empty input");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const double d = estimated[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(estimated.size());
}

}  // namespace catelab
