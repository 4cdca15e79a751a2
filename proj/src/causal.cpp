#include "rbci/causal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbci/stats.hpp"

namespace rbci::causal {

EffectDraws effect_draws(const PanelData& panel, const factor_model::PredictiveDraws& pred,
                         const CellMask& cells) {
  EffectDraws eff;
  eff.cells = cells.cells();
  eff.draws.resize(pred.outcome_draws.rows(), static_cast<int>(eff.cells.size()));
  for (std::size_t c = 0; c < eff.cells.size(); ++c) {
    const Cell cell = eff.cells[c];
    // Locate the cell in the predictive draw set.
    const auto it = std::lower_bound(pred.cells.begin(), pred.cells.end(), cell);
    if (it == pred.cells.end() || !(*it == cell))
      throw std::invalid_argument("effect_draws: cell missing from predictive draws");
    const int pc = static_cast<int>(it - pred.cells.begin());
    if (!panel.is_observed(cell.unit, cell.time))
      throw std::invalid_argument("effect_draws: reference outcome missing at (" +
                                  panel.unit_ids[cell.unit] + "," + panel.time_ids[cell.time] + ")");
    const double y = panel.outcomes(cell.unit, cell.time);
    eff.draws.col(static_cast<int>(c)) =
        (y - pred.outcome_draws.col(pc).array()).matrix();
  }
  return eff;
}

AttCurve att_curve(const EffectDraws& effects, const TreatmentIndicator& treatment, double alpha,
                   bool event_time) {
  if (effects.cells.empty()) throw std::invalid_argument("att_curve: no effect cells");
  const int kept = static_cast<int>(effects.draws.rows());

  // Group effect cells by period (calendar time, or time since treatment).
  std::map<int, std::vector<int>> cells_of_period;
  for (std::size_t c = 0; c < effects.cells.size(); ++c) {
    const Cell cell = effects.cells[c];
    if (treatment.values(cell.unit, cell.time) == 0.0)
      throw std::invalid_argument("att_curve: effect cell outside the treated regime");
    int period = cell.time;
    if (event_time) {
      int start = cell.time;
      while (start > 0 && treatment.values(cell.unit, start - 1) == 1.0) --start;
      period = cell.time - start;
    }
    cells_of_period[period].push_back(static_cast<int>(c));
  }
  if (cells_of_period.empty()) throw std::invalid_argument("att_curve: empty treated set");

  AttCurve curve;
  Eigen::VectorXd overall = Eigen::VectorXd::Zero(kept);
  for (const auto& [period, idx] : cells_of_period) {
    Eigen::VectorXd period_mean = Eigen::VectorXd::Zero(kept);
    for (int c : idx) period_mean += effects.draws.col(c);
    period_mean /= static_cast<double>(idx.size());
    overall += period_mean;

    DrawStore store{"att(" + std::to_string(period) + ")",
                    {period_mean.data(), period_mean.data() + kept}};
    curve.per_period.push_back({period, static_cast<int>(idx.size()), summarize(store, alpha)});
  }
  overall /= static_cast<double>(cells_of_period.size());
  DrawStore store{"att", {overall.data(), overall.data() + kept}};
  curve.overall = summarize(store, alpha);
  return curve;
}

std::map<int, scoring::ScoreReport> per_time_evaluation(
    const std::vector<Cell>& cells, const std::vector<PosteriorSummary>& summaries,
    const std::vector<double>& truth, double alpha) {
  if (cells.size() != summaries.size() || cells.size() != truth.size())
    throw std::invalid_argument("per_time_evaluation: size mismatch");
  if (cells.empty()) throw std::invalid_argument("per_time_evaluation: empty input");
  std::map<int, std::vector<scoring::ScoreReport>> buckets;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!std::isfinite(truth[c])) throw std::invalid_argument("per_time_evaluation: missing truth");
    PosteriorSummary s = summaries[c];
    s.alpha = alpha;
    buckets[cells[c].time].push_back(scoring::combined_score(s, truth[c]));
  }
  std::map<int, scoring::ScoreReport> out;
  for (const auto& [time, reports] : buckets) out[time] = scoring::average_score(reports);
  return out;
}

}  // namespace rbci::causal
