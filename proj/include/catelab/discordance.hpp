#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include "catelab/dgp.hpp"

namespace catelab {

/// Closed-form covariance of the conditional average effect tau(X) and the
/// unit-level effect tau_i under the linear-interaction model with bivariate
/// Gaussian covariates:
///
///   sigma_x^2 * (beta4 + beta5 * rho * sigma_z / sigma_x)^2
///
/// Always nonnegative, and equal to Var(tau(X)).
double cate_ite_covariance(const LinearInteractionModel& model,
                           const GaussianPairParams& params);

/// Closed-form correlation of tau(X) and tau_i, in [0, 1]:
///
///   |sigma_x * (beta4 + beta5 * rho * sigma_z / sigma_x)|
///   -----------------------------------------------------------------
///   sqrt(beta4^2 sigma_x^2 + beta5^2 sigma_z^2 + 2 beta4 beta5 rho sigma_x sigma_z)
///
/// Zero exactly when beta4 + beta5 * rho * sigma_z / sigma_x = 0. Throws
/// estimation_error when Var(tau_i) is zero (correlation undefined).
double cate_ite_correlation(const LinearInteractionModel& model,
                            const GaussianPairParams& params);

/// Var(tau_i) = beta4^2 sigma_x^2 + beta5^2 sigma_z^2
///            + 2 beta4 beta5 rho sigma_x sigma_z, evaluated in the
/// cancellation-free form (beta4 sigma_x + beta5 rho sigma_z)^2
///            + beta5^2 sigma_z^2 (1 - rho^2).
double ite_variance(const LinearInteractionModel& model,
                    const GaussianPairParams& params);

/// Empirical agreement metrics between paired (cate, ite) values.
struct EmpiricalDiscordance {
  /// Pearson correlation (n-denominator convention in both moments); absent
  /// when either coordinate has zero variance.
  std::optional<double> correlation;
  /// Fraction of pairs whose values have strictly opposite signs. An exact
  /// zero disagrees with nothing.
  double sign_disagreement_rate = 0.0;
  std::size_t n = 0;
};

/// Requires >= 2 pairs (throws invalid_parameter otherwise).
EmpiricalDiscordance empirical_discordance(
    std::span<const std::pair<double, double>> pairs);

/// Mean squared difference. Throws invalid_parameter on length mismatch or
/// empty input.
double cate_mse(std::span<const double> estimated, std::span<const double> truth);

/// Assembled per-scenario discordance summary. Closed-form entries are only
/// present for linear scenarios; correlations may be absent when undefined.
struct DiscordanceReport {
  std::optional<double> closed_form_covariance;
  std::optional<double> closed_form_correlation;
  std::optional<double> empirical_correlation;
  double sign_disagreement_rate = 0.0;
  double cate_mse = 0.0;
};

}  // namespace catelab
