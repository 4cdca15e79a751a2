// Seeded generators for the two simulation designs, retaining ground truth
// for scoring: a cross-sectional regression with a latent half-normal
// confounder, and a staggered-adoption panel with a low-rank factor
// structure plus untreated-regime confounding.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "rbci/panel.hpp"

namespace rbci::simgen {

struct CrossSectionSim {
  Eigen::VectorXd y, d, x1, x2, x3, u;
  double gamma = 0.0;
  double tau_true = 1.0;
};

/// X1,X2,X3 iid N(0,1); U = |X1|/sqrt(1-2/pi); D ~ Bernoulli(expit(0.4U +
/// 0.4X2 + 0.8X3)); Y ~ N(tau D + X1 + gamma U, 1).
CrossSectionSim simulate_cross_section(int n, double gamma, double tau_true, std::uint64_t seed);

struct TauSpec {
  enum class Kind { constant, ramp } kind = Kind::constant;
  double value = 1.0;  // constant effect
  double base = 0.5;   // ramp at adoption period
  double slope = 0.1;  // ramp increment per exposure period
};

struct PanelSimConfig {
  int n_units = 30;
  int n_times = 100;
  int n_factors = 2;
  double beta_u = 0.0;
  double treated_fraction = 1.0;  // share of units assigned a start time
  int start_lo = 40;              // inclusive uniform start range
  int start_hi = 95;
  TauSpec tau_spec;
};

struct PanelSim {
  PanelData panel;
  Eigen::MatrixXd true_tau;   // N x T, zero wherever untreated
  Eigen::MatrixXd latent_u;   // N x T
  Eigen::MatrixXd loadings;   // N x K
  Eigen::MatrixXd factors;    // T x K
  double beta_u = 0.0;
  int true_k = 0;
};

/// y_it = tau_it D_it + lambda_i' f_t + beta_u U_it (1 - D_it) + eps_it.
PanelSim simulate_panel(const PanelSimConfig& config, std::uint64_t seed);

}  // namespace rbci::simgen
