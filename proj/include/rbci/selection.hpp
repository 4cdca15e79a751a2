// Learning-rate and factor-count selection: grid search scored against known
// truth, and the placebo-masking pipeline for panels.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbci/factor_model.hpp"
#include "rbci/panel.hpp"
#include "rbci/scoring.hpp"

namespace rbci::selection {

struct OmegaGrid {
  std::vector<double> values;  // strictly increasing, all > 0

  void validate() const;
  static OmegaGrid range(double lo, double step, double hi);
};

struct GridPoint {
  std::optional<int> k;
  double omega = 1.0;
  scoring::ScoreReport score;  // averaged over replicates / cells
  double se = 0.0;             // standard error of the averaged combined score
  int n_ok = 0;
  std::vector<std::string> diagnostics;
};

struct SelectionResult {
  double best_omega = 1.0;
  std::optional<int> best_k;
  std::vector<GridPoint> surface;  // ordered by (k, omega)
  std::uint64_t seed = 0;

  // Placebo-pipeline artifacts.
  CellMask eval_mask, tune_mask;
  std::vector<int> pseudo_units;
  std::vector<std::optional<int>> placebo_starts;
  std::vector<Cell> eval_cells;
  std::vector<PosteriorSummary> eval_summaries;
  std::vector<double> eval_truth;
  scoring::ScoreReport eval_overall;
  std::map<int, scoring::ScoreReport> eval_per_time;
};

struct GridFit {
  PosteriorSummary summary;
  bool ok = false;
  std::string diagnostic;
};

/// Produces the posterior summary of the estimand for one (omega, replicate)
/// pair; `seed` is pre-derived for that pair.
using OmegaFitFactory = std::function<GridFit(double omega, int replicate, std::uint64_t seed)>;

/// Grid search over omega: average the combined score of factory summaries
/// against truth(replicate) and return the argmin. Ties break toward omega
/// closest to 1.
SelectionResult select_omega(const OmegaFitFactory& factory,
                             const std::function<double(int)>& truth, const OmegaGrid& grid,
                             int replicates, double alpha, std::uint64_t seed,
                             exec::Exec mode = exec::Exec::openmp);

struct PlaceboOptions {
  std::vector<int> k_set = {1, 2, 3};
  double tune_fraction = 0.20;   // masked share of remaining-control cells
  double pseudo_fraction = 0.15; // share of never-treated units pseudo-treated
  double alpha = 0.05;
  std::optional<int> start_lo, start_hi;  // placebo start range; defaults are
                                          // panel-relative [0.40T, 0.95T]
  // When set, the tuning mask may also cover pre-treatment cells of treated
  // units (staggered designs); otherwise only never-treated units tune.
  bool tune_include_pretreatment = false;
  // Independent chains averaged per grid point to suppress Monte Carlo
  // variability in the surface.
  int chain_replicates = 1;
  factor_model::FactorPriors priors;
  factor_model::FactorOptions chain;
};

/// The placebo-masking (K, omega) pipeline: pseudo-treat a share of
/// never-treated units with staggered placebo starts and mask their
/// post-placebo cells for final evaluation; tune (K, omega) on a random cell
/// mask of the remaining controls; refit the winner and evaluate exclusively
/// on the pseudo-treated held-out cells.
SelectionResult placebo_pipeline(const PanelData& panel, const OmegaGrid& grid,
                                 const PlaceboOptions& options, std::uint64_t seed);

struct SurfaceRow {
  std::optional<int> k;
  double omega = 1.0;
  double squared_bias = 0.0;
  double interval_score = 0.0;
  double combined = 0.0;
  int n_ok = 0;
};

/// Flat tabular view of the score surface, ordered by (k, omega).
std::vector<SurfaceRow> score_surface_export(const SelectionResult& result);

}  // namespace rbci::selection
