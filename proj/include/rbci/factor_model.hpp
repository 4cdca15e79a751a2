// Gibbs sampler for the tempered latent-factor panel model fit on observed,
// non-excluded cells, with posterior-predictive counterfactual draws.
//
// Model on included cells: Y_it = lambda_i' f_t + X_it' beta + eps_it with
// eps_it ~ N(0, sigma_i^2). Tempering multiplies every data-precision term by
// omega; precision updates use shape a + omega*n_i/2. Within one iteration the
// per-unit and per-time updates are independent given the other block and run
// under the chosen execution policy with pre-derived random streams, so
// serial and OpenMP execution agree bitwise.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "rbci/exec.hpp"
#include "rbci/panel.hpp"

namespace rbci::factor_model {

struct FactorPriors {
  double loading_scale = 1.0;            // lambda_i ~ N(0, loading_scale I_K)
  double a = 0.01;                       // precision shape
  double b = 0.01;                       // precision rate
  std::optional<Eigen::MatrixXd> beta_cov;  // SPD, required when covariates present

  void validate(int n_covariates) const;
};

enum class VarianceMode { per_unit, shared };

struct FactorOptions {
  int iterations = 4000;
  int burnin = 1500;
  VarianceMode variance = VarianceMode::per_unit;
  std::optional<double> fixed_sigma2;  // skip precision updates entirely
  exec::Exec mode = exec::Exec::openmp;
};

struct FactorFit {
  int n_factors = 0;
  double omega = 1.0;
  int iterations = 0;
  int burnin = 0;
  std::uint64_t seed = 0;
  std::vector<Eigen::MatrixXd> loading_draws;  // kept draws, each N x K
  std::vector<Eigen::MatrixXd> factor_draws;   // kept draws, each T x K
  Eigen::MatrixXd beta_draws;                  // kept x p
  Eigen::MatrixXd sigma2_draws;                // kept x N

  int kept() const { return static_cast<int>(loading_draws.size()); }
};

FactorFit gibbs_factor(const PanelData& panel, const CellMask& excluded, int n_factors,
                       double omega, const FactorPriors& priors, const FactorOptions& options,
                       std::uint64_t seed);

/// Tempered precision-update shape for n included cells.
inline double precision_shape(double a, double omega, long n_included) {
  return a + 0.5 * omega * static_cast<double>(n_included);
}

/// Per-cell posterior predictive draws: mean draws mu_it^(m) from the factor
/// bilinear form plus covariates, and outcome draws adding Gaussian noise
/// with variance sigma_i^2(m) / omega.
struct PredictiveDraws {
  std::vector<Cell> cells;
  Eigen::MatrixXd mean_draws;     // kept x |cells|
  Eigen::MatrixXd outcome_draws;  // kept x |cells|
  double omega = 1.0;
};

PredictiveDraws posterior_predict(const FactorFit& fit, const PanelData& panel,
                                  const CellMask& cells);

/// Summary per cell: mean of mean_draws, equal-tailed interval of outcome
/// draws.
std::vector<PosteriorSummary> cell_summaries(const PredictiveDraws& pred, double alpha);

}  // namespace rbci::factor_model
