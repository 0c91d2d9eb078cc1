#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "catelab/random.hpp"

namespace catelab {

/// Moments of the jointly Gaussian covariate pair (X, Z). X is observed,
/// Z is hidden from the estimators but known to the generating process.
struct GaussianPairParams {
  double mu_x = 0.0;
  double mu_z = 0.0;
  double sigma_x = 1.0;
  double sigma_z = 1.0;
  double rho = 0.0;

  /// Throws invalid_parameter unless sigma_x > 0, sigma_z > 0 and
  /// |rho| < 1 (strict, so the 2x2 covariance matrix is positive definite).
  void validate() const;

  /// E[Z | X = x] = mu_z + rho * (sigma_z / sigma_x) * (x - mu_x).
  double conditional_mean_z(double x) const;

  /// Var(Z | X = x) = sigma_z^2 * (1 - rho^2).
  double conditional_var_z() const;
};

enum class PropensityKind { IgnorableLogistic, ConfoundedLogistic, Constant };

/// Treatment-assignment mechanism. IgnorableLogistic and Constant depend on
/// x only; ConfoundedLogistic depends on the hidden z as well.
class PropensitySpec {
public:
  /// p(x) = 1 / (1 + exp(-x))
  static PropensitySpec ignorable_logistic();
  /// p(x, z) = 1 / (1 + exp(z - x))
  static PropensitySpec confounded_logistic();
  /// p constant; throws invalid_parameter unless p in (0, 1).
  static PropensitySpec constant(double p);

  PropensityKind kind() const { return kind_; }
  double constant_p() const { return constant_p_; }

  /// True iff the assignment probability never reads z.
  bool ignores_z() const { return kind_ != PropensityKind::ConfoundedLogistic; }

  /// Assignment probability, strictly inside (0, 1).
  double operator()(double x, double z) const;

private:
  PropensitySpec(PropensityKind kind, double p) : kind_(kind), constant_p_(p) {}

  PropensityKind kind_;
  double constant_p_;
};

double propensity(const PropensitySpec& spec, double x, double z);

/// Outcome model
///
///   Y = beta0 + beta1*A + beta2*X + beta3*Z + beta4*A*X + beta5*A*Z + eps
///
/// with eps ~ N(0, noise_sd^2) shared between both potential outcomes of a
/// unit, so the unit's effect beta1 + beta4*x + beta5*z is noise-free.
struct LinearInteractionModel {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double beta4 = 0.0;
  double beta5 = 0.0;
  double noise_sd = 0.0;

  void validate() const;

  /// Potential outcome with the noise term supplied explicitly.
  double potential_outcome(int a, double x, double z, double eps) const;

  /// The model of the linear demonstration: (3, 1, 0, 0, 1, 1), unit noise.
  static LinearInteractionModel demo();
};

/// Unit-level effect beta1 + beta4*x + beta5*z. Independent of noise_sd.
double true_ite(const LinearInteractionModel& model, double x, double z);

/// Population conditional average effect at X = x:
/// beta1 + beta4*x + beta5 * E[Z | X = x].
double true_cate(const LinearInteractionModel& model,
                 const GaussianPairParams& params, double x);

/// Randomized experiment with outcome A*(X1^2 - X2^2) + A*Z^2 + A, no noise
/// term, X1, X2, Z i.i.d. standard normal, A Bernoulli(assignment_prob)
/// independent of everything.
struct QuadraticRctModel {
  double assignment_prob = 0.5;

  void validate() const;
};

/// Unit-level effect x1^2 - x2^2 + z^2 + 1 of the quadratic RCT model.
double rct_true_ite(double x1, double x2, double z);

enum class RctAxis { X1, X2 };

/// Conditional average effect along one observed axis of the quadratic RCT
/// model: value^2 + 1 for X1, 3 - value^2 for X2.
double rct_cate_oracle(RctAxis axis, double value);

/// One sampled individual of the linear-interaction process.
struct Unit {
  double x = 0.0;
  double z = 0.0;
  int a = 0;        // treatment indicator
  double y0 = 0.0;  // potential outcome under control
  double y1 = 0.0;  // potential outcome under treatment
  double y = 0.0;   // observed outcome, y1 if a == 1 else y0
  double ite = 0.0; // y1 - y0, exactly
};

/// One sampled individual of the quadratic RCT process.
struct RctUnit {
  double x1 = 0.0;
  double x2 = 0.0;
  double z = 0.0;
  int a = 0;
  double y0 = 0.0;
  double y1 = 0.0;
  double y = 0.0;
  double ite = 0.0;
};

struct Provenance {
  std::string scenario_id;
  std::uint64_t replication = 0;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<Unit> units;
  Provenance provenance;
};

struct RctDataset {
  std::vector<RctUnit> units;
  Provenance provenance;
};

/// One draw of the bivariate normal pair via the lower-triangular (Cholesky)
/// factor of the 2x2 covariance. Consumes exactly two normals from `rng`.
std::pair<double, double> sample_covariate_pair(const GaussianPairParams& params,
                                                RandomStream& rng);

/// Samples n units. Per unit the stream is consumed in a fixed order:
/// covariate pair (two normals), outcome noise (one normal), assignment
/// (one uniform). Both potential outcomes share the unit's noise draw.
/// Deterministic given `seed`.
Dataset generate_dataset(const LinearInteractionModel& model,
                         const GaussianPairParams& params,
                         const PropensitySpec& spec, std::size_t n,
                         std::uint64_t seed);

/// Samples n units of the quadratic RCT process: three normals then one
/// uniform per unit. Deterministic given `seed`.
RctDataset generate_rct_dataset(const QuadraticRctModel& model, std::size_t n,
                                std::uint64_t seed);

}  // namespace catelab
