#include "coprosim/stats.hpp"

#include <cmath>

namespace coprosim::stats {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}  // namespace

double norm_pdf(double z) {
  return std::exp(-0.5 * z * z - kLogSqrt2Pi);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double norm_logcdf(double z) {
  if (z > -10.0) return std::log(norm_cdf(z));
  // Left tail: Phi(z) = phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...),
  // so log Phi avoids the underflow of Phi itself.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log(series);
}

double inverse_mills(double z) {
  if (z > -10.0) {
    const double c = norm_cdf(z);
    return norm_pdf(z) / c;
  }
  // phi/Phi = -z / (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...) as z -> -inf.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -z / series;
}

double pearson(const double* x, const double* y, unsigned long n) {
  if (n == 0) return 0.0;
  double mx = 0.0, my = 0.0;
  for (unsigned long i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (unsigned long i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace coprosim::stats
