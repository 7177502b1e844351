#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace covlaw {

double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> x);
/// Type-7 (linear interpolation) sample quantile, p in [0, 1].
double quantile7(std::span<const double> x, double p);
double median(std::span<const double> x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = a + b x.
LineFit ols(std::span<const double> x, std::span<const double> y);
/// OLS of log y against log x; every value must be positive.
LineFit loglog_fit(std::span<const double> x, std::span<const double> y);

}  // namespace covlaw
