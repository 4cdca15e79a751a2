// Closed-form expected-score curves for the known-variance Gaussian mean
// problem with a flat prior: the analytic oracle against which Monte Carlo
// estimates of the expected combined score are checked. The expected score
// decomposes as risk(w) = sigma^2/n + f_n(w), and f_n has a unique interior
// minimum at w = 1.

#pragma once

namespace rbci::risk {

struct GaussianRiskParams {
  int n = 1;             // sample size
  double sigma = 1.0;    // noise scale
  double alpha = 0.05;   // interval level

  void validate() const;
};

/// Expected interval score of the tempered-posterior interval at learning
/// rate `omega`: (2 sigma / sqrt(n)) [ t + (2/alpha)(phi(t) - t PhiBar(t)) ]
/// with t = z_{1-alpha/2} / sqrt(omega).
double f_n(double omega, const GaussianRiskParams& params);

/// d f_n / d omega in closed form.
double f_n_prime(double omega, const GaussianRiskParams& params);

/// Expected combined score sigma^2/n + f_n(omega).
double risk(double omega, const GaussianRiskParams& params);

}  // namespace rbci::risk
