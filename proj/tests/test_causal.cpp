#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rbci/causal.hpp"
#include "rbci/rng.hpp"
#include "rbci/stats.hpp"
#include "rbci/scoring.hpp"

using namespace rbci;

namespace {

// Predictive draws with fixed values per cell (constant across draws).
factor_model::PredictiveDraws constant_pred(const std::vector<Cell>& cells,
                                            const std::vector<double>& values, int kept) {
  factor_model::PredictiveDraws pred;
  pred.cells = cells;
  pred.mean_draws.resize(kept, static_cast<int>(cells.size()));
  pred.outcome_draws.resize(kept, static_cast<int>(cells.size()));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    pred.mean_draws.col(static_cast<int>(c)).setConstant(values[c]);
    pred.outcome_draws.col(static_cast<int>(c)).setConstant(values[c]);
  }
  return pred;
}

}  // namespace

TEST_SUITE("causal") {

TEST_CASE("perfect counterfactuals give zero effect draws; shifts are linear") {
  PanelData panel = testing::panel_from_matrix(testing::rank1_matrix(4, 6));
  panel.treatment_start[1] = 3;
  const std::vector<Cell> cells{{1, 3}, {1, 4}, {1, 5}};
  std::vector<double> values;
  for (const auto& c : cells) values.push_back(panel.outcomes(c.unit, c.time));
  const CellMask mask(cells, 4, 6);

  const auto pred = constant_pred(cells, values, 8);
  const auto eff = causal::effect_draws(panel, pred, mask);
  CHECK(eff.draws.cwiseAbs().maxCoeff() == 0.0);

  auto shifted = pred;
  shifted.outcome_draws.array() += 0.75;
  const auto eff2 = causal::effect_draws(panel, shifted, mask);
  CHECK((eff2.draws.array() + 0.75).abs().maxCoeff() < 1e-12);
}

TEST_CASE("effect draws need an observed reference outcome") {
  PanelData panel = testing::panel_from_matrix(testing::rank1_matrix(4, 6));
  panel.outcomes(1, 3) = std::nan("");
  panel.treatment_start[1] = 3;
  const std::vector<Cell> cells{{1, 3}};
  const auto pred = constant_pred(cells, {0.0}, 4);
  CHECK_THROWS(causal::effect_draws(panel, pred, CellMask(cells, 4, 6)));
}

TEST_CASE("att curve with a single treated unit and constant effect") {
  PanelData panel = testing::panel_from_matrix(Eigen::MatrixXd::Zero(3, 5));
  panel.treatment_start[0] = 2;
  const auto ind = build_treatment_indicator(panel);

  causal::EffectDraws eff;
  eff.cells = {{0, 2}, {0, 3}, {0, 4}};
  eff.draws = Eigen::MatrixXd::Constant(10, 3, 0.5);
  const auto curve = causal::att_curve(eff, ind);
  REQUIRE(curve.per_period.size() == 3);
  for (const auto& pt : curve.per_period) {
    CHECK(pt.summary.mean == doctest::Approx(0.5));
    CHECK(pt.n_treated == 1);
  }
  CHECK(curve.overall.mean == doctest::Approx(0.5));
}

TEST_CASE("staggered adoption: early periods exclude later adopters") {
  PanelData panel = testing::panel_from_matrix(Eigen::MatrixXd::Zero(3, 5));
  panel.treatment_start[0] = 2;
  panel.treatment_start[1] = 3;
  const auto ind = build_treatment_indicator(panel);

  causal::EffectDraws eff;
  eff.cells = {{0, 2}, {0, 3}, {0, 4}, {1, 3}, {1, 4}};
  eff.draws.resize(6, 5);
  eff.draws.col(0).setConstant(1.0);
  eff.draws.col(1).setConstant(1.0);
  eff.draws.col(2).setConstant(1.0);
  eff.draws.col(3).setConstant(3.0);
  eff.draws.col(4).setConstant(3.0);
  const auto curve = causal::att_curve(eff, ind);
  REQUIRE(curve.per_period.size() == 3);
  CHECK(curve.per_period[0].time == 2);
  CHECK(curve.per_period[0].n_treated == 1);
  CHECK(curve.per_period[0].summary.mean == doctest::Approx(1.0));
  CHECK(curve.per_period[1].n_treated == 2);
  CHECK(curve.per_period[1].summary.mean == doctest::Approx(2.0));
  // Overall is the equal-weight period average of (1, 2, 2).
  CHECK(curve.overall.mean == doctest::Approx((1.0 + 2.0 + 2.0) / 3.0));

  // Permuting cell order leaves the curve unchanged.
  causal::EffectDraws perm;
  perm.cells = {eff.cells[3], eff.cells[0], eff.cells[4], eff.cells[1], eff.cells[2]};
  perm.draws.resize(6, 5);
  perm.draws.col(0) = eff.draws.col(3);
  perm.draws.col(1) = eff.draws.col(0);
  perm.draws.col(2) = eff.draws.col(4);
  perm.draws.col(3) = eff.draws.col(1);
  perm.draws.col(4) = eff.draws.col(2);
  const auto curve2 = causal::att_curve(perm, ind);
  CHECK(curve2.overall.mean == curve.overall.mean);
  CHECK(curve2.per_period[1].summary.mean == curve.per_period[1].summary.mean);
}

TEST_CASE("event-time alignment groups by exposure length") {
  PanelData panel = testing::panel_from_matrix(Eigen::MatrixXd::Zero(2, 6));
  panel.treatment_start[0] = 2;
  panel.treatment_start[1] = 4;
  const auto ind = build_treatment_indicator(panel);
  causal::EffectDraws eff;
  eff.cells = {{0, 2}, {0, 3}, {1, 4}, {1, 5}};
  eff.draws = Eigen::MatrixXd::Constant(4, 4, 1.0);
  const auto curve = causal::att_curve(eff, ind, 0.05, /*event_time=*/true);
  REQUIRE(curve.per_period.size() == 2);  // exposure 0 and 1
  CHECK(curve.per_period[0].time == 0);
  CHECK(curve.per_period[0].n_treated == 2);
  CHECK(curve.per_period[1].time == 1);
}

TEST_CASE("oracle counterfactuals recover the generator ATT exactly") {
  // True Y(0) fed as the counterfactual: per-period ATT equals the true
  // per-period effect average to floating point.
  Eigen::MatrixXd y0 = testing::rank1_matrix(3, 6);
  Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(3, 6);
  PanelData panel = testing::panel_from_matrix(y0);
  panel.treatment_start[0] = 3;
  panel.treatment_start[2] = 4;
  std::vector<Cell> cells;
  std::vector<double> y0_values;
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 6; ++t)
      if (panel.is_treated_cell(i, t)) {
        tau(i, t) = 0.3 * (i + 1) + 0.1 * t;
        panel.outcomes(i, t) = y0(i, t) + tau(i, t);
        cells.push_back({i, t});
        y0_values.push_back(y0(i, t));
      }
  const auto pred = constant_pred(cells, y0_values, 5);
  const auto eff = causal::effect_draws(panel, pred, CellMask(cells, 3, 6));
  const auto ind = build_treatment_indicator(panel);
  const auto curve = causal::att_curve(eff, ind);
  for (const auto& pt : curve.per_period) {
    double truth = 0.0;
    int count = 0;
    for (int i = 0; i < 3; ++i)
      if (panel.is_treated_cell(i, pt.time)) {
        truth += tau(i, pt.time);
        ++count;
      }
    CHECK(pt.summary.mean == doctest::Approx(truth / count).epsilon(1e-12));
  }
}

TEST_CASE("per-time evaluation: zeros under perfection, aggregation identity") {
  const std::vector<Cell> cells{{0, 3}, {1, 3}, {0, 4}, {1, 4}};
  std::vector<PosteriorSummary> perfect;
  const std::vector<double> truth{1.0, 2.0, 3.0, 4.0};
  for (double v : truth) perfect.push_back({v, v, v, 0.05});
  const auto zero_reports = causal::per_time_evaluation(cells, perfect, truth, 0.05);
  CHECK(zero_reports.size() == 2);  // one report per distinct period
  for (const auto& [t, r] : zero_reports) CHECK(r.combined == 0.0);

  // Balanced periods: the period-average of averages equals the flat average.
  std::vector<PosteriorSummary> noisy;
  noisy.push_back({1.2, 0.9, 1.4, 0.05});
  noisy.push_back({2.4, 1.9, 2.5, 0.05});
  noisy.push_back({2.7, 2.6, 3.2, 0.05});
  noisy.push_back({4.4, 3.9, 4.6, 0.05});
  const auto per_time = causal::per_time_evaluation(cells, noisy, truth, 0.05);
  std::vector<scoring::ScoreReport> flat;
  for (std::size_t c = 0; c < cells.size(); ++c)
    flat.push_back(scoring::combined_score(noisy[c], truth[c]));
  const auto flat_avg = scoring::average_score(flat);
  double period_avg = 0.0;
  for (const auto& [t, r] : per_time) period_avg += r.combined;
  period_avg /= static_cast<double>(per_time.size());
  CHECK(period_avg == doctest::Approx(flat_avg.combined).epsilon(1e-12));
}

TEST_CASE("zero-truth placebo cells reduce the combined score to IS + mean^2") {
  const PosteriorSummary s{0.4, -0.1, 0.8, 0.05};
  const auto r = scoring::combined_score(s, 0.0);
  CHECK(r.combined ==
        doctest::Approx(scoring::interval_score(-0.1, 0.8, 0.0, 0.05) + 0.4 * 0.4));
}


TEST_CASE("outcome-scale and effect-scale scoring coincide on placebo cells") {
  // On never-treated placebo cells the true effect is zero, so scoring the
  // counterfactual against the observed outcome equals scoring the effect
  // draws against zero.
  PanelData panel = testing::panel_from_matrix(testing::rank1_matrix(3, 5));
  panel.treatment_start[2] = 3;
  const std::vector<Cell> cells{{2, 3}, {2, 4}};
  const CellMask mask(cells, 3, 5);
  factor_model::PredictiveDraws pred;
  pred.cells = cells;
  pred.mean_draws.resize(40, 2);
  pred.outcome_draws.resize(40, 2);
  rng::Stream s = rng::substream(3, "placebo-equiv");
  for (int m = 0; m < 40; ++m)
    for (int c = 0; c < 2; ++c) {
      pred.mean_draws(m, c) = 0.4 * s.normal();
      pred.outcome_draws(m, c) = pred.mean_draws(m, c) + 0.6 * s.normal();
    }
  const auto eff = causal::effect_draws(panel, pred, mask);
  for (int c = 0; c < 2; ++c) {
    const Cell cell = cells[c];
    const double y = panel.outcomes(cell.unit, cell.time);

    // Outcome scale: predictive summary vs observed truth.
    std::vector<double> outcome_col(pred.outcome_draws.col(c).data(),
                                    pred.outcome_draws.col(c).data() + 40);
    PosteriorSummary ys;
    ys.mean = stats::mean(outcome_col);
    ys.lower = stats::quantile(outcome_col, 0.025);
    ys.upper = stats::quantile(outcome_col, 0.975);
    ys.alpha = 0.05;
    const auto outcome_score = scoring::combined_score(ys, y);

    // Effect scale: tau draws vs zero.
    DrawStore store{"tau", {eff.draws.col(c).data(), eff.draws.col(c).data() + 40}};
    const auto ts = summarize(store, 0.05);
    const auto effect_score = scoring::combined_score(ts, 0.0);

    CHECK(effect_score.combined == doctest::Approx(outcome_score.combined).epsilon(1e-12));
    CHECK(effect_score.squared_bias == doctest::Approx(outcome_score.squared_bias).epsilon(1e-12));
  }
}

}  // TEST_SUITE
