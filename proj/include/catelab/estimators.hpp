#pragma once

#include <array>
#include <cstddef>

#include "catelab/dgp.hpp"

namespace catelab {

/// Ordinary least squares fit of the working regression
///
///   E[Y | A, X] = b0 + b1*A + b2*X + b3*A*X
///
/// which deliberately omits the unobserved Z.
struct FitResult {
  /// (intercept, treatment, x, treatment:x)
  std::array<double, 4> coefficients{};
  /// Residual sum of squares divided by n - 4.
  double residual_variance = 0.0;
  std::size_t n_used = 0;
};

/// Fits the working model by Householder QR on the design [1, a, x, a*x].
///
/// Throws estimation_error when fewer than 5 units are supplied or when the
/// design is rank deficient (for example, all units in one arm, or constant
/// x); the error names the offending column.
FitResult fit_working_model(const Dataset& data);

/// Estimated conditional average effect b1 + b3 * x.
double predict_cate(const FitResult& fit, double x);

/// mean(y | a = 1) - mean(y | a = 0). Throws estimation_error on an empty arm.
double naive_difference_in_means(const Dataset& data);

/// Decomposition of the naive contrast for the no-interaction model
/// (beta4 = beta5 = 0):
///
///   naive = beta1 + beta2 * (mean x | a=1 - mean x | a=0)
///                 + beta3 * (mean z | a=1 - mean z | a=0) + residual
///
/// residual_term is defined as the difference, so the four terms sum to
/// naive_contrast exactly; on noiseless data it is the rounding residue only.
struct BiasDecomposition {
  double naive_contrast = 0.0;
  double structural_effect = 0.0;
  double x_imbalance_term = 0.0;
  double z_imbalance_term = 0.0;
  double residual_term = 0.0;
};

/// Throws invalid_parameter when the model has nonzero interaction
/// coefficients (the identity is only stated for the no-interaction form),
/// estimation_error on an empty arm.
BiasDecomposition decompose_naive_bias(const Dataset& data,
                                       const LinearInteractionModel& model);

}  // namespace catelab
