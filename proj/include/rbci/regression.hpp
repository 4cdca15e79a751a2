// Gibbs sampler for the tempered Gaussian linear regression posterior, plus
// the conjugate closed forms used as oracles.
//
// The tempered posterior raises the Gaussian likelihood to the power omega;
// conditionals stay conjugate with the data-precision term scaled by omega
// and the precision update using shape a0 + omega*N/2.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rbci/panel.hpp"

namespace rbci::regression {

struct RegressionPriors {
  Eigen::VectorXd m0;      // coefficient prior mean
  Eigen::MatrixXd V0;      // coefficient prior covariance (SPD)
  double a0 = 0.01;        // precision prior shape
  double b0 = 0.01;        // precision prior rate

  static RegressionPriors weakly_informative(int q, double scale = 100.0);
  void validate() const;
};

struct RegressionFit {
  std::vector<DrawStore> beta_draws;  // one store per coefficient
  DrawStore sigma2_draws;
  double omega = 1.0;
  int iterations = 0;
  int burnin = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

struct RegressionOptions {
  int iterations = 5000;
  int burnin = 2000;
  std::optional<double> fixed_sigma2;  // known-variance mode
};

RegressionFit gibbs_regression(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                               const RegressionPriors& priors, double omega,
                               const RegressionOptions& options, std::uint64_t seed);

/// Exact conditional posterior N(m_w, V_w) of the coefficients for known
/// sigma2: V_w = (V0^-1 + w sigma^-2 X'X)^-1, m_w = V_w (V0^-1 m0 + w sigma^-2 X'y).
struct ConjugatePosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

ConjugatePosterior conjugate_posterior(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                       const RegressionPriors& priors, double omega,
                                       double sigma2);

/// Flat-prior, intercept-only, known-variance case: N(ybar, sigma2/(w n)).
struct GaussianPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

GaussianPosterior closed_form_tau_posterior(const Eigen::VectorXd& y, double omega, double sigma2);

/// Summary of one coefficient's retained draws.
PosteriorSummary tau_summary(const RegressionFit& fit, int coefficient_index,
                             double alpha = 0.05);

/// Tempered Gamma-update shape for the noise precision.
inline double tempered_gamma_shape(double a0, double omega, int n) {
  return a0 + omega * static_cast<double>(n) / 2.0;
}

}  // namespace rbci::regression
