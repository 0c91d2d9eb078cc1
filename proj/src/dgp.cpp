#include "catelab/dgp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "catelab/errors.hpp"

namespace catelab {

namespace {

// Numerically stable logistic, clamped into the open unit interval so the
// positivity invariant holds even for extreme inputs.
double logistic(double t) {
  double v;
  if (t >= 0.0) {
    v = 1.0 / (1.0 + std::exp(-t));
  } else {
    const double e = std::exp(t);
    v = e / (1.0 + e);
  }
  const double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::min(std::max(v, lo), hi);
}

}  // namespace

void GaussianPairParams::validate() const {
  if (!(sigma_x > 0.0) || !std::isfinite(sigma_x)) {
    std::ostringstream os;
    os << "sigma_x must be a positive real (got " << sigma_x << ")";
    throw invalid_parameter(os.str());
  }
  if (!(sigma_z > 0.0) || !std::isfinite(sigma_z)) {
    std::ostringstream os;
    os << "sigma_z must be a positive real (got " << sigma_z << ")";
    throw invalid_parameter(os.str());
  }
  if (!(std::abs(rho) < 1.0)) {
    std::ostringstream os;
    os << "rho must satisfy |rho| < 1 (got " << rho << ")";
    throw invalid_parameter(os.str());
  }
  if (!std::isfinite(mu_x) || !std::isfinite(mu_z)) {
    throw invalid_parameter("covariate means must be finite");
  }
}

double GaussianPairParams::conditional_mean_z(double x) const {
  return mu_z + rho * (sigma_z / sigma_x) * (x - mu_x);
}

double GaussianPairParams::conditional_var_z() const {
  return sigma_z * sigma_z * (1.0 - rho * rho);
}

PropensitySpec PropensitySpec::ignorable_logistic() {
  return PropensitySpec(PropensityKind::IgnorableLogistic, 0.5);
}

PropensitySpec PropensitySpec::confounded_logistic() {
  return PropensitySpec(PropensityKind::ConfoundedLogistic, 0.5);
}

PropensitySpec PropensitySpec::constant(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    std::ostringstream os;
    os << "constant propensity must lie strictly in (0, 1) (got " << p << ")";
    throw invalid_parameter(os.str());
  }
  return PropensitySpec(PropensityKind::Constant, p);
}

double PropensitySpec::operator()(double x, double z) const {
  switch (kind_) {
    case PropensityKind::IgnorableLogistic:
      return logistic(x);
    case PropensityKind::ConfoundedLogistic:
      return logistic(x - z);
    case PropensityKind::Constant:
      return constant_p_;
  }
  throw invalid_parameter("unreachable propensity kind");
}

double propensity(const PropensitySpec& spec, double x, double z) {
  return spec(x, z);
}

void LinearInteractionModel::validate() const {
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    std::ostringstream os;
    os << "noise_sd must be a nonnegative real (got " << noise_sd << ")";
    throw invalid_parameter(os.str());
  }
  for (double b : {beta0, beta1, beta2, beta3, beta4, beta5}) {
    if (!std::isfinite(b)) {
      throw invalid_parameter("model coefficients must be finite");
    }
  }
}

double LinearInteractionModel::potential_outcome(int a, double x, double z,
                                                 double eps) const {
  const double da = static_cast<double>(a);
  return beta0 + beta1 * da + beta2 * x + beta3 * z + beta4 * da * x +
         beta5 * da * z + eps;
}

LinearInteractionModel LinearInteractionModel::demo() {
  return LinearInteractionModel{3.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0};
}

double true_ite(const LinearInteractionModel& model, double x, double z) {
  return model.beta1 + model.beta4 * x + model.beta5 * z;
}

double true_cate(const LinearInteractionModel& model,
                 const GaussianPairParams& params, double x) {
  // Grouped as intercept + slope * x so that a vanishing slope
  // (beta4 + beta5 * rho * sigma_z / sigma_x = 0) yields an exactly
  // constant function, not one constant up to cancellation error.
  const double ratio = params.rho * (params.sigma_z / params.sigma_x);
  const double slope = model.beta4 + model.beta5 * ratio;
  const double intercept =
      model.beta1 + model.beta5 * (params.mu_z - ratio * params.mu_x);
  return intercept + slope * x;
}

void QuadraticRctModel::validate() const {
  if (!(assignment_prob > 0.0) || !(assignment_prob < 1.0)) {
    std::ostringstream os;
    os << "assignment_prob must lie strictly in (0, 1) (got " << assignment_prob
       << ")";
    throw invalid_parameter(os.str());
  }
}

double rct_true_ite(double x1, double x2, double z) {
  return x1 * x1 - x2 * x2 + z * z + 1.0;
}

double rct_cate_oracle(RctAxis axis, double value) {
  switch (axis) {
    case RctAxis::X1:
      return value * value + 1.0;
    case RctAxis::X2:
      return 3.0 - value * value;
  }
  throw invalid_parameter("unreachable RCT axis");
}

std::pair<double, double> sample_covariate_pair(const GaussianPairParams& params,
                                                RandomStream& rng) {
  params.validate();
  const double u1 = rng.normal();
  const double u2 = rng.normal();
  // Lower-triangular factor of [[sx^2, r sx sz], [r sx sz, sz^2]]:
  //   [sx, 0; r sz, sz sqrt(1 - r^2)]
  const double x = params.mu_x + params.sigma_x * u1;
  const double z = params.mu_z +
                   params.sigma_z * (params.rho * u1 +
                                     std::sqrt(1.0 - params.rho * params.rho) * u2);
  return {x, z};
}

Dataset generate_dataset(const LinearInteractionModel& model,
                         const GaussianPairParams& params,
                         const PropensitySpec& spec, std::size_t n,
                         std::uint64_t seed) {
  model.validate();
  params.validate();
  if (n == 0) {
    throw invalid_parameter("generate_dataset: n must be at least 1");
  }

  RandomStream rng(seed);
  Dataset data;
  data.provenance.seed = seed;
  data.units.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Unit& u = data.units[i];
    const auto [x, z] = sample_covariate_pair(params, rng);
    const double eps = model.noise_sd * rng.normal();
    const int a = rng.bernoulli(spec(x, z)) ? 1 : 0;
    u.x = x;
    u.z = z;
    u.a = a;
    u.y0 = model.potential_outcome(0, x, z, eps);
    u.y1 = model.potential_outcome(1, x, z, eps);
    u.y = (a == 1) ? u.y1 : u.y0;
    u.ite = u.y1 - u.y0;
  }
  return data;
}

RctDataset generate_rct_dataset(const QuadraticRctModel& model, std::size_t n,
                                std::uint64_t seed) {
  model.validate();
  if (n == 0) {
    throw invalid_parameter("generate_rct_dataset: n must be at least 1");
  }

  RandomStream rng(seed);
  RctDataset data;
  data.provenance.seed = seed;
  data.units.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    RctUnit& u = data.units[i];
    u.x1 = rng.normal();
    u.x2 = rng.normal();
    u.z = rng.normal();
    u.a = rng.bernoulli(model.assignment_prob) ? 1 : 0;
    u.y0 = 0.0;
    u.y1 = rct_true_ite(u.x1, u.x2, u.z);
    u.y = (u.a == 1) ? u.y1 : u.y0;
    u.ite = u.y1 - u.y0;
  }
  return data;
}

}  // namespace catelab
