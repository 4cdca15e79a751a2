// Core data model: unit x time outcome panels with staggered absorbing
// treatment, cell masks, posterior draw stores and interval summaries.
//
// All types are immutable after construction (validate() is called by the
// producers) and safe to share across parallel workers.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rbci {

/// One (unit, time) position.
struct Cell {
  int unit = 0;
  int time = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Rectangular outcome panel. Missing outcomes are stored as NaN; every
/// consumer must go through is_observed(). Covariates, when present, are one
/// N x T matrix per covariate.
struct PanelData {
  std::vector<std::string> unit_ids;
  std::vector<std::string> time_ids;
  Eigen::MatrixXd outcomes;  // N x T, NaN marks missing
  std::vector<Eigen::MatrixXd> covariates;
  std::vector<std::optional<int>> treatment_start;  // index into time_ids
  std::vector<std::string> unit_groups;             // empty or size N

  int n_units() const { return static_cast<int>(unit_ids.size()); }
  int n_times() const { return static_cast<int>(time_ids.size()); }
  int n_covariates() const { return static_cast<int>(covariates.size()); }

  bool is_observed(int unit, int time) const { return !std::isnan(outcomes(unit, time)); }

  bool is_treated_cell(int unit, int time) const {
    return treatment_start[unit].has_value() && time >= *treatment_start[unit];
  }

  /// Covariate vector for one cell (length p).
  Eigen::VectorXd covariate_row(int unit, int time) const;

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

/// Binary staggered absorbing-treatment indicator.
struct TreatmentIndicator {
  Eigen::MatrixXd values;  // N x T of {0,1}
};

TreatmentIndicator build_treatment_indicator(const PanelData& panel);

/// An ordered, duplicate-free set of in-range cells.
class CellMask {
 public:
  CellMask() = default;
  CellMask(std::vector<Cell> cells, int n_units, int n_times);

  bool contains(int unit, int time) const {
    return !bitmap_.empty() && bitmap_[static_cast<std::size_t>(unit) * n_times_ + time] != 0;
  }
  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  /// Set union; both masks must share the panel shape.
  CellMask unioned(const CellMask& other) const;

 private:
  std::vector<Cell> cells_;
  std::vector<unsigned char> bitmap_;
  int n_units_ = 0, n_times_ = 0;
};

/// Deterministically sample round(fraction * #eligible) cells without
/// replacement among cells satisfying `eligible`.
CellMask random_cell_mask(const PanelData& panel, double fraction,
                          const std::function<bool(int, int)>& eligible,
                          std::uint64_t seed);

/// Retained post-burn-in draws of one named scalar quantity.
struct DrawStore {
  std::string name;
  std::vector<double> draws;

  void validate() const;  // >= 2 finite draws
};

/// Mean and equal-tailed (1 - alpha) interval of a draw set.
struct PosteriorSummary {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
};

PosteriorSummary summarize(const DrawStore& draws, double alpha);

}  // namespace rbci
