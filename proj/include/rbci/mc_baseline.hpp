// Frequentist matrix-completion counterfactual baseline: regularized
// alternating least squares over observed cells, with wild-bootstrap
// predictive intervals on held-out cells.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rbci/exec.hpp"
#include "rbci/panel.hpp"
#include "rbci/scoring.hpp"

namespace rbci::mc_baseline {

struct AlsOptions {
  double ridge = 1e-3;
  int max_iter = 500;
  double tol = 1e-8;
  exec::Exec mode = exec::Exec::openmp;
};

struct MCFit {
  Eigen::MatrixXd completed;  // N x T fitted low-rank matrix on all cells
  Eigen::MatrixXd row_factors;  // N x K
  Eigen::MatrixXd col_factors;  // T x K
  int rank = 0;
  double ridge = 0.0;
  bool converged = false;
  int iterations_used = 0;
  std::vector<double> objective_trace;  // per iteration, non-increasing
};

/// Alternating ridge regressions for row and column factors over cells that
/// are neither missing in the panel nor listed in `missing`. Initialized
/// from a truncated SVD of the zero-imputed matrix.
MCFit als_complete(const PanelData& panel, const CellMask& missing, int rank,
                   const AlsOptions& options, std::uint64_t seed);

struct BootstrapOptions {
  int replicates = 200;
  AlsOptions als;
};

struct BootstrapIntervals {
  std::vector<Cell> cells;
  std::vector<double> lower, upper;
  int replicates_kept = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> diagnostics;  // dropped replicates
};

/// Wild bootstrap on the masked cells: unit-wise Rademacher sign flips of the
/// masked-cell residuals form starred outcomes that re-enter a full refit;
/// each replicate's prediction at a masked cell is the refit value plus a
/// unit-signed innovation at the pooled residual scale. Intervals are
/// cellwise empirical 2.5%/97.5% quantiles across replicates.
BootstrapIntervals wild_bootstrap(const PanelData& panel, const MCFit& fit,
                                  const CellMask& masked, const CellMask& other_missing,
                                  const BootstrapOptions& options, std::uint64_t seed);

struct CellScore {
  Cell cell;
  PosteriorSummary summary;
  scoring::ScoreReport score;
};

/// Per-cell scores of the point fit + bootstrap interval against truth,
/// through the shared scoring module.
std::vector<CellScore> mc_evaluate(const MCFit& fit, const BootstrapIntervals& intervals,
                                   const std::vector<double>& truth, double alpha);

}  // namespace rbci::mc_baseline
