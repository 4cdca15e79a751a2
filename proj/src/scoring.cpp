#include "rbci/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rbci/rng.hpp"

namespace rbci::scoring {

double interval_score(double lower, double upper, double tau, double alpha) {
  if (lower > upper) throw std::invalid_argument("interval_score: lower > upper");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("interval_score: alpha must be in (0,1)");
  if (!std::isfinite(lower) || !std::isfinite(upper) || !std::isfinite(tau))
    throw std::invalid_argument("interval_score: non-finite input");
  double s = upper - lower;
  if (tau > upper) s += (2.0 / alpha) * (tau - upper);
  if (tau < lower) s += (2.0 / alpha) * (lower - tau);
  return s;
}

ScoreReport combined_score(const PosteriorSummary& summary, double tau) {
  ScoreReport r;
  r.alpha = summary.alpha;
  r.squared_bias = (summary.mean - tau) * (summary.mean - tau);
  r.interval_score = interval_score(summary.lower, summary.upper, tau, summary.alpha);
  r.combined = r.squared_bias + r.interval_score;
  return r;
}

double mse_score(double mean, double variance, double tau) {
  if (variance < 0.0) throw std::invalid_argument("mse_score: negative variance");
  return (mean - tau) * (mean - tau) + variance;
}

double empirical_crps(const DrawStore& draws, double tau, std::uint64_t pair_seed) {
  draws.validate();
  const std::vector<double>& x = draws.draws;
  const std::size_t n = x.size();

  double term1 = 0.0;
  for (double v : x) term1 += std::fabs(v - tau);
  term1 /= static_cast<double>(n);

  double pair_mean;
  if (n <= kCrpsExactLimit) {
    // Exact mean over all n^2 ordered pairs, via the sorted identity
    // sum_{i<j}(x_(j) - x_(i)) = sum_k (2k - n + 1) x_(k).
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      s += (2.0 * static_cast<double>(k) - static_cast<double>(n) + 1.0) * sorted[k];
    pair_mean = 2.0 * s / (static_cast<double>(n) * static_cast<double>(n));
  } else {
    rng::Stream stream = rng::substream(pair_seed, "scoring/crps-pairs");
    const std::size_t samples = 200000;
    double s = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
      const double a = x[stream.uniform_int(n)];
      const double b = x[stream.uniform_int(n)];
      s += std::fabs(a - b);
    }
    pair_mean = s / static_cast<double>(samples);
  }
  return term1 - 0.5 * pair_mean;
}

ScoreReport average_score(std::span<const ScoreReport> per_cell) {
  if (per_cell.empty()) throw std::invalid_argument("average_score: empty input");
  ScoreReport avg;
  avg.alpha = per_cell.front().alpha;
  for (const auto& r : per_cell) {
    if (r.alpha != avg.alpha) throw std::invalid_argument("average_score: mixed alpha values");
    avg.squared_bias += r.squared_bias;
    avg.interval_score += r.interval_score;
    avg.combined += r.combined;
  }
  const double n = static_cast<double>(per_cell.size());
  avg.squared_bias /= n;
  avg.interval_score /= n;
  avg.combined /= n;
  return avg;
}

}  // namespace rbci::scoring
