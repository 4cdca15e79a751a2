// Small numerical statistics utilities shared across modules.

#pragma once

#include <span>
#include <vector>

namespace rbci::stats {

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF, accurate to ~1e-16 (erfc based).
double normal_cdf(double x);

/// Standard normal upper tail P(Z > x).
double normal_upper_tail(double x);

/// Inverse standard normal CDF for p in (0,1); |error| < 1e-12.
double normal_quantile(double p);

/// Interpolated order statistic (type-7 rule, h = (n-1)p) of unsorted data.
double quantile(std::span<const double> values, double p);

double mean(std::span<const double> values);
double variance(std::span<const double> values);

/// Two-sample Kolmogorov-Smirnov statistic sup|F1 - F2|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Large-sample two-sample KS critical value at level `alpha`
/// (supported levels: 0.10, 0.05, 0.01).
double ks_critical(std::size_t n1, std::size_t n2, double alpha);

}  // namespace rbci::stats
