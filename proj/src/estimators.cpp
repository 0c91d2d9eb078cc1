#include "catelab/estimators.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "catelab/errors.hpp"

namespace catelab {

namespace {

constexpr std::size_t kCols = 4;
constexpr const char* kColumnNames[kCols] = {"intercept", "treatment", "x",
                                             "treatment:x"};

[[noreturn]] void throw_singular(std::size_t column) {
  std::ostringstream os;
  os << "singular design: column '" << kColumnNames[column]
     << "' is linearly dependent on the preceding columns (or zero)";
  throw estimation_error(os.str());
}

}  // namespace

FitResult fit_working_model(const Dataset& data) {
  const std::size_t n = data.units.size();
  if (n < kCols + 1) {
    std::ostringstream os;
    os << "fit_working_model: need at least " << (kCols + 1) << " units, got "
       << n;
    throw estimation_error(os.str());
  }

  // Column-major working copy of [1, a, x, a*x] with y carried as a fifth
  // column so one pass of Householder reflections produces both R and Q'y.
  std::vector<double> m((kCols + 1) * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Unit& u = data.units[i];
    const double a = static_cast<double>(u.a);
    m[0 * n + i] = 1.0;
    m[1 * n + i] = a;
    m[2 * n + i] = u.x;
    m[3 * n + i] = a * u.x;
    m[4 * n + i] = u.y;
  }

  // Pre-factorization column norms anchor the rank test.
  std::array<double, kCols> full_norm{};
  for (std::size_t j = 0; j < kCols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += m[j * n + i] * m[j * n + i];
    full_norm[j] = std::sqrt(s);
  }

  const double eps = std::numeric_limits<double>::epsilon();
  std::vector<double> v(n);

  for (std::size_t j = 0; j < kCols; ++j) {
    double* col = &m[j * n];
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += col[i] * col[i];
    norm = std::sqrt(norm);

    if (norm <= static_cast<double>(n) * eps * full_norm[j] ||
        full_norm[j] == 0.0) {
      throw_singular(j);
    }

    const double alpha = (col[j] > 0.0) ? -norm : norm;
    double vtv = 0.0;
    v[j] = col[j] - alpha;
    vtv += v[j] * v[j];
    for (std::size_t i = j + 1; i < n; ++i) {
      v[i] = col[i];
      vtv += v[i] * v[i];
    }

    col[j] = alpha;  // R(j, j)
    for (std::size_t i = j + 1; i < n; ++i) col[i] = 0.0;

    for (std::size_t k = j + 1; k <= kCols; ++k) {
      double* ck = &m[k * n];
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i] * ck[i];
      const double factor = 2.0 * dot / vtv;
      for (std::size_t i = j; i < n; ++i) ck[i] -= factor * v[i];
    }
  }

  FitResult fit;
  fit.n_used = n;

  // Back-substitution on the leading 4x4 of R against the rotated response.
  const double* y = &m[kCols * n];
  for (std::size_t jj = kCols; jj-- > 0;) {
    double s = y[jj];
    for (std::size_t k = jj + 1; k < kCols; ++k) {
      s -= m[k * n + jj] * fit.coefficients[k];
    }
    fit.coefficients[jj] = s / m[jj * n + jj];
  }

  double rss = 0.0;
  for (std::size_t i = kCols; i < n; ++i) rss += y[i] * y[i];
  fit.residual_variance = rss / static_cast<double>(n - kCols);
  return fit;
}

double predict_cate(const FitResult& fit, double x) {
  return fit.coefficients[1] + fit.coefficients[3] * x;
}

namespace {

struct ArmMeans {
  double mean_y1 = 0.0, mean_y0 = 0.0;
  double mean_x1 = 0.0, mean_x0 = 0.0;
  double mean_z1 = 0.0, mean_z0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
};

ArmMeans arm_means(const Dataset& data) {
  ArmMeans s;
  double sy1 = 0, sy0 = 0, sx1 = 0, sx0 = 0, sz1 = 0, sz0 = 0;
  for (const Unit& u : data.units) {
    if (u.a == 1) {
      ++s.n1;
      sy1 += u.y;
      sx1 += u.x;
      sz1 += u.z;
    } else {
      ++s.n0;
      sy0 += u.y;
      sx0 += u.x;
      sz0 += u.z;
    }
  }
  if (s.n1 == 0 || s.n0 == 0) {
    throw estimation_error("both treatment arms must be nonempty (treated: " +
                           std::to_string(s.n1) +
                           ", control: " + std::to_string(s.n0) + ")");
  }
  s.mean_y1 = sy1 / static_cast<double>(s.n1);
  s.mean_y0 = sy0 / static_cast<double>(s.n0);
  s.mean_x1 = sx1 / static_cast<double>(s.n1);
  s.mean_x0 = sx0 / static_cast<double>(s.n0);
  s.mean_z1 = sz1 / static_cast<double>(s.n1);
  s.mean_z0 = sz0 / static_cast<double>(s.n0);
  return s;
}

}  // namespace

double naive_difference_in_means(const Dataset& data) {
  const ArmMeans s = arm_means(data);
  return s.mean_y1 - s.mean_y0;
}

BiasDecomposition decompose_naive_bias(const Dataset& data,
                                       const LinearInteractionModel& model) {
  if (model.beta4 != 0.0 || model.beta5 != 0.0) {
    throw invalid_parameter(
        "decompose_naive_bias: only supported for models with "
        "beta4 = beta5 = 0");
  }
  const ArmMeans s = arm_means(data);

  BiasDecomposition d;
  d.naive_contrast = s.mean_y1 - s.mean_y0;
  d.structural_effect = model.beta1;
  d.x_imbalance_term = model.beta2 * (s.mean_x1 - s.mean_x0);
  d.z_imbalance_term = model.beta3 * (s.mean_z1 - s.mean_z0);
  // Defined as the difference so the identity holds exactly; absorbs the
  // noise means (and rounding) only.
  d.residual_term = d.naive_contrast - d.structural_effect -
                    d.x_imbalance_term - d.z_imbalance_term;
  return d;
}

}  // namespace catelab
