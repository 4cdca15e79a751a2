#include "rbci/panel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "rbci/rng.hpp"
#include "rbci/stats.hpp"

namespace rbci {

Eigen::VectorXd PanelData::covariate_row(int unit, int time) const {
  Eigen::VectorXd x(n_covariates());
  for (int k = 0; k < n_covariates(); ++k) x[k] = covariates[k](unit, time);
  return x;
}

void PanelData::validate() const {
  const int n = n_units(), t = n_times();
  if (n < 2 || t < 2) throw std::invalid_argument("PanelData: need N >= 2 and T >= 2");
  if (outcomes.rows() != n || outcomes.cols() != t)
    throw std::invalid_argument("PanelData: outcome matrix shape mismatch");
  if (static_cast<int>(treatment_start.size()) != n)
    throw std::invalid_argument("PanelData: treatment_start size mismatch");
  if (!unit_groups.empty() && static_cast<int>(unit_groups.size()) != n)
    throw std::invalid_argument("PanelData: unit_groups size mismatch");

  std::unordered_set<std::string> seen;
  for (const auto& id : unit_ids)
    if (!seen.insert(id).second) throw std::invalid_argument("PanelData: duplicate unit id " + id);
  seen.clear();
  for (const auto& id : time_ids)
    if (!seen.insert(id).second) throw std::invalid_argument("PanelData: duplicate time id " + id);

  for (int i = 0; i < n; ++i) {
    if (treatment_start[i] && (*treatment_start[i] < 0 || *treatment_start[i] >= t))
      throw std::invalid_argument("PanelData: treatment start out of range for unit " + unit_ids[i]);
    for (int s = 0; s < t; ++s) {
      const double y = outcomes(i, s);
      if (!std::isnan(y) && !std::isfinite(y))
        throw std::invalid_argument("PanelData: non-finite outcome at (" + unit_ids[i] + "," +
                                    time_ids[s] + ")");
    }
  }
  for (const auto& cov : covariates) {
    if (cov.rows() != n || cov.cols() != t)
      throw std::invalid_argument("PanelData: covariate shape mismatch");
    if (!cov.allFinite()) throw std::invalid_argument("PanelData: non-finite covariate");
  }
}

TreatmentIndicator build_treatment_indicator(const PanelData& panel) {
  TreatmentIndicator ind;
  ind.values = Eigen::MatrixXd::Zero(panel.n_units(), panel.n_times());
  for (int i = 0; i < panel.n_units(); ++i) {
    if (!panel.treatment_start[i]) continue;
    for (int t = *panel.treatment_start[i]; t < panel.n_times(); ++t) ind.values(i, t) = 1.0;
  }
  return ind;
}

CellMask::CellMask(std::vector<Cell> cells, int n_units, int n_times)
    : cells_(std::move(cells)), n_units_(n_units), n_times_(n_times) {
  std::sort(cells_.begin(), cells_.end());
  if (std::adjacent_find(cells_.begin(), cells_.end()) != cells_.end())
    throw std::invalid_argument("CellMask: duplicate cell");
  bitmap_.assign(static_cast<std::size_t>(n_units) * n_times, 0);
  for (const auto& c : cells_) {
    if (c.unit < 0 || c.unit >= n_units || c.time < 0 || c.time >= n_times)
      throw std::invalid_argument("CellMask: cell out of range");
    bitmap_[static_cast<std::size_t>(c.unit) * n_times + c.time] = 1;
  }
}

CellMask CellMask::unioned(const CellMask& other) const {
  if (other.empty()) return *this;
  if (empty()) return other;
  if (n_units_ != other.n_units_ || n_times_ != other.n_times_)
    throw std::invalid_argument("CellMask: union over mismatched shapes");
  std::vector<Cell> merged = cells_;
  for (const auto& c : other.cells_)
    if (!contains(c.unit, c.time)) merged.push_back(c);
  return CellMask(std::move(merged), n_units_, n_times_);
}

CellMask random_cell_mask(const PanelData& panel, double fraction,
                          const std::function<bool(int, int)>& eligible, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("random_cell_mask: fraction must be in (0,1)");
  std::vector<Cell> pool;
  for (int i = 0; i < panel.n_units(); ++i)
    for (int t = 0; t < panel.n_times(); ++t)
      if (eligible(i, t)) pool.push_back({i, t});
  if (pool.empty()) throw std::invalid_argument("random_cell_mask: no eligible cells");

  const std::size_t k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(pool.size())));
  rng::Stream stream = rng::substream(seed, "panel/cell-mask");
  // Partial Fisher-Yates: the first k entries are the sample.
  for (std::size_t j = 0; j < k && j + 1 < pool.size(); ++j) {
    const std::size_t pick = j + stream.uniform_int(pool.size() - j);
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(std::max<std::size_t>(k, 0));
  return CellMask(std::move(pool), panel.n_units(), panel.n_times());
}

void DrawStore::validate() const {
  if (draws.size() < 2) throw std::invalid_argument("DrawStore: need at least 2 draws");
  for (double d : draws)
    if (!std::isfinite(d)) throw std::invalid_argument("DrawStore: non-finite draw in " + name);
}

PosteriorSummary summarize(const DrawStore& draws, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("summarize: alpha must be in (0,1)");
  draws.validate();
  PosteriorSummary s;
  s.alpha = alpha;
  s.mean = stats::mean(draws.draws);
  s.lower = stats::quantile(draws.draws, alpha / 2.0);
  s.upper = stats::quantile(draws.draws, 1.0 - alpha / 2.0);
  return s;
}

}  // namespace rbci
