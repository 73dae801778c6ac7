#pragma once

namespace coprosim::stats {

/// Standard normal density.
double norm_pdf(double z);

/// Standard normal CDF via erfc; accurate in both tails down to the
/// double underflow threshold (|z| < ~37.5).
double norm_cdf(double z);

/// log(norm_cdf(z)) without underflow: direct evaluation for z > -10, the
/// asymptotic tail expansion below that.
double norm_logcdf(double z);

/// phi(z) / Phi(z), the inverse Mills ratio; switches to the asymptotic form
/// deep in the left tail where pdf and cdf both underflow.
double inverse_mills(double z);

/// Pearson correlation of two equal-length samples; 0 when either side has
/// zero variance.
double pearson(const double* x, const double* y, unsigned long n);

}  // namespace coprosim::stats
