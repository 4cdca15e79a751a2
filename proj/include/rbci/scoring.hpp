// Proper scoring rules for posterior summaries of causal estimands.

#pragma once

#include <cstdint>
#include <span>

#include "rbci/panel.hpp"

namespace rbci::scoring {

/// Squared bias plus interval score of one reported summary against a
/// realized value; combined = squared_bias + interval_score.
struct ScoreReport {
  double squared_bias = 0.0;
  double interval_score = 0.0;
  double combined = 0.0;
  double alpha = 0.05;
};

/// Gneiting-Raftery interval score of the (1-alpha) interval [lower, upper]:
/// width plus (2/alpha)-scaled exceedances.
double interval_score(double lower, double upper, double tau, double alpha);

/// Combined score of Eq-style point + interval accuracy.
ScoreReport combined_score(const PosteriorSummary& summary, double tau);

/// Squared bias plus variance.
double mse_score(double mean, double variance, double tau);

/// Empirical CRPS, mean|X - tau| - 0.5 mean|X - X'| over ordered draw pairs.
/// Exact for draw sets up to `kCrpsExactLimit`; larger sets use a seeded
/// unbiased random-pair estimator.
double empirical_crps(const DrawStore& draws, double tau,
                      std::uint64_t pair_seed = 0x5eed);

inline constexpr std::size_t kCrpsExactLimit = 5000;

/// Component-wise arithmetic mean; all reports must share alpha.
ScoreReport average_score(std::span<const ScoreReport> per_cell);

}  // namespace rbci::scoring
