#include "rbci/analytic_risk.hpp"

#include <cmath>
#include <stdexcept>

#include "rbci/stats.hpp"

namespace rbci::risk {

void GaussianRiskParams::validate() const {
  if (n < 1) throw std::invalid_argument("GaussianRiskParams: n must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("GaussianRiskParams: sigma must be positive finite");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("GaussianRiskParams: alpha must be in (0,1)");
}

static void check_omega(double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw std::invalid_argument("analytic_risk: omega must be positive finite");
}

double f_n(double omega, const GaussianRiskParams& params) {
  check_omega(omega);
  params.validate();
  const double z = stats::normal_quantile(1.0 - params.alpha / 2.0);
  const double t = z / std::sqrt(omega);
  const double bracket =
      t + (2.0 / params.alpha) * (stats::normal_pdf(t) - t * stats::normal_upper_tail(t));
  return (2.0 * params.sigma / std::sqrt(static_cast<double>(params.n))) * bracket;
}

double f_n_prime(double omega, const GaussianRiskParams& params) {
  check_omega(omega);
  params.validate();
  const double z = stats::normal_quantile(1.0 - params.alpha / 2.0);
  const double tail = stats::normal_upper_tail(z / std::sqrt(omega));
  return -(params.sigma / std::sqrt(static_cast<double>(params.n))) *
         (z / std::pow(omega, 1.5)) * (1.0 - (2.0 / params.alpha) * tail);
}

double risk(double omega, const GaussianRiskParams& params) {
  return params.sigma * params.sigma / static_cast<double>(params.n) + f_n(omega, params);
}

}  // namespace rbci::risk
