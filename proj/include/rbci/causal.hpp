// Treatment-effect estimands built from counterfactual predictive draws:
// unit-time effect draws, calendar-time and overall ATT curves, and
// per-period score evaluation against known truth (placebo designs).

#pragma once

#include <map>
#include <vector>

#include "rbci/factor_model.hpp"
#include "rbci/panel.hpp"
#include "rbci/scoring.hpp"

namespace rbci::causal {

/// Per-cell draws of tau_it^(m) = Y_it - Ytilde_it^(m)(0), where Y_it is the
/// observed treated outcome (real analyses) or the held-out true outcome
/// (placebo evaluation).
struct EffectDraws {
  std::vector<Cell> cells;
  Eigen::MatrixXd draws;  // kept x |cells|
};

EffectDraws effect_draws(const PanelData& panel,
                         const factor_model::PredictiveDraws& pred,
                         const CellMask& cells);

struct AttPoint {
  int time = 0;
  int n_treated = 0;
  PosteriorSummary summary;
};

struct AttCurve {
  std::vector<AttPoint> per_period;  // calendar post-treatment periods
  PosteriorSummary overall;
};

/// Average effect draws over treated units per post period, then the equal
/// weight period average, draw by draw. `event_time` aligns periods by time
/// since treatment instead of calendar time.
AttCurve att_curve(const EffectDraws& effects, const TreatmentIndicator& treatment,
                   double alpha = 0.05, bool event_time = false);

/// Per post-period average of squared bias and interval score of per-cell
/// summaries against per-cell truth.
std::map<int, scoring::ScoreReport> per_time_evaluation(
    const std::vector<Cell>& cells, const std::vector<PosteriorSummary>& summaries,
    const std::vector<double>& truth, double alpha);

}  // namespace rbci::causal
