#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace catelab {

double mean(std::span<const double> values);

/// Population variance (n denominator).
double variance(std::span<const double> values);

/// Sample variance (n - 1 denominator); requires >= 2 values.
double sample_variance(std::span<const double> values);

/// Population covariance (n denominator) of two equal-length spans.
double covariance(std::span<const double> a, std::span<const double> b);

/// Linear-interpolation quantile on pre-sorted ascending data: the value at
/// fractional rank p * (n - 1) (the convention commonly labelled "type 7").
double quantile_sorted(std::span<const double> sorted, double p);

}  // namespace catelab
