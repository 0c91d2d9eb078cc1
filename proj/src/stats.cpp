#include "catelab/stats.hpp"

#include <cmath>

#include "catelab/errors.hpp"

namespace catelab {

double mean(std::span<const double> values) {
  if (values.empty()) throw invalid_parameter("mean: empty input");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return s / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) {
    throw invalid_parameter("sample_variance: need at least 2 values");
  }
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return s / static_cast<double>(values.size() - 1);
}

double covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw invalid_parameter("covariance: length mismatch");
  }
  const double ma = mean(a);
  const double mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size());
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw invalid_parameter("quantile: empty input");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace catelab
