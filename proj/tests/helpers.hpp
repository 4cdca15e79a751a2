// Shared construction helpers for the test suites.

#pragma once

#include <string>

#include "rbci/panel.hpp"

namespace rbci::testing {

/// All-control panel wrapping a fixed outcome matrix.
inline PanelData panel_from_matrix(const Eigen::MatrixXd& y) {
  PanelData p;
  for (int i = 0; i < y.rows(); ++i) p.unit_ids.push_back("u" + std::to_string(i));
  for (int t = 0; t < y.cols(); ++t) p.time_ids.push_back(std::to_string(t));
  p.outcomes = y;
  p.treatment_start.assign(y.rows(), std::nullopt);
  return p;
}

/// Noiseless rank-1 panel u v' with +-1-ish entries.
inline Eigen::MatrixXd rank1_matrix(int n, int t) {
  Eigen::VectorXd u(n), v(t);
  for (int i = 0; i < n; ++i) u[i] = (i % 2 == 0) ? 1.0 : -1.0;
  for (int s = 0; s < t; ++s) v[s] = (s % 3 == 0) ? -1.0 : 1.0;
  return u * v.transpose();
}

}  // namespace rbci::testing
