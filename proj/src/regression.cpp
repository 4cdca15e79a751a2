#include "rbci/regression.hpp"

#include <cmath>
#include <stdexcept>

#include "rbci/rng.hpp"

namespace rbci::regression {

RegressionPriors RegressionPriors::weakly_informative(int q, double scale) {
  RegressionPriors p;
  p.m0 = Eigen::VectorXd::Zero(q);
  p.V0 = scale * Eigen::MatrixXd::Identity(q, q);
  return p;
}

void RegressionPriors::validate() const {
  if (m0.size() != V0.rows() || V0.rows() != V0.cols())
    throw std::invalid_argument("RegressionPriors: shape mismatch");
  if (!(a0 > 0.0 && b0 > 0.0)) throw std::invalid_argument("RegressionPriors: a0, b0 must be > 0");
  if (!V0.isApprox(V0.transpose()))
    throw std::invalid_argument("RegressionPriors: V0 must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(V0);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("RegressionPriors: V0 must be positive definite");
}

namespace {

void check_inputs(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double omega) {
  if (design.rows() != y.size()) throw std::invalid_argument("gibbs_regression: X/y size mismatch");
  if (design.cols() < 1 || design.rows() <= design.cols())
    throw std::invalid_argument("gibbs_regression: need N > q >= 1");
  if (!design.allFinite() || !y.allFinite())
    throw std::invalid_argument("gibbs_regression: non-finite inputs");
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw std::invalid_argument("gibbs_regression: omega must be positive");
}

// Draw from N(mean, Prec^-1) given the precision matrix.
Eigen::VectorXd draw_gaussian_from_precision(const Eigen::MatrixXd& prec,
                                             const Eigen::VectorXd& rhs, rng::Stream& stream,
                                             Eigen::VectorXd* mean_out = nullptr) {
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) {
    const double cond = prec.norm() * prec.inverse().norm();
    throw std::runtime_error("gaussian draw: precision not positive definite (cond~" +
                             std::to_string(cond) + ")");
  }
  const Eigen::VectorXd mean = llt.solve(rhs);
  if (mean_out) *mean_out = mean;
  Eigen::VectorXd z(prec.rows());
  for (int k = 0; k < z.size(); ++k) z[k] = stream.normal();
  // x = mean + L^-T z  =>  covariance (L L^T)^-1 = Prec^-1
  return mean + llt.matrixU().solve(z);
}

}  // namespace

RegressionFit gibbs_regression(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                               const RegressionPriors& priors, double omega,
                               const RegressionOptions& options, std::uint64_t seed) {
  check_inputs(design, y, omega);
  priors.validate();
  const int n = static_cast<int>(design.rows());
  const int q = static_cast<int>(design.cols());
  if (priors.m0.size() != q) throw std::invalid_argument("gibbs_regression: prior dimension != q");
  if (options.iterations <= options.burnin || options.burnin < 0)
    throw std::invalid_argument("gibbs_regression: need iterations > burnin >= 0");
  if (options.fixed_sigma2 && !(*options.fixed_sigma2 > 0.0))
    throw std::invalid_argument("gibbs_regression: fixed sigma2 must be positive");

  RegressionFit fit;
  fit.omega = omega;
  fit.iterations = options.iterations;
  fit.burnin = options.burnin;
  fit.seed = seed;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < q)
    fit.warnings.push_back("design matrix is column-rank deficient; prior keeps updates proper");

  const Eigen::MatrixXd xtx = design.transpose() * design;
  const Eigen::VectorXd xty = design.transpose() * y;
  const Eigen::MatrixXd v0_inv = priors.V0.llt().solve(Eigen::MatrixXd::Identity(q, q));
  const Eigen::VectorXd v0_inv_m0 = v0_inv * priors.m0;

  const int kept = options.iterations - options.burnin;
  fit.beta_draws.assign(q, DrawStore{});
  for (int k = 0; k < q; ++k) {
    fit.beta_draws[k].name = "beta[" + std::to_string(k) + "]";
    fit.beta_draws[k].draws.reserve(kept);
  }
  fit.sigma2_draws.name = "sigma2";
  fit.sigma2_draws.draws.reserve(kept);

  rng::Stream chain = rng::substream(seed, "regression/chain");
  double sigma2 = options.fixed_sigma2.value_or(1.0);
  Eigen::VectorXd beta = priors.m0;

  for (int iter = 0; iter < options.iterations; ++iter) {
    const double data_prec = omega / sigma2;
    const Eigen::MatrixXd prec = v0_inv + data_prec * xtx;
    const Eigen::VectorXd rhs = v0_inv_m0 + data_prec * xty;
    beta = draw_gaussian_from_precision(prec, rhs, chain);

    if (!options.fixed_sigma2) {
      const double rss = (y - design * beta).squaredNorm();
      const double shape = tempered_gamma_shape(priors.a0, omega, n);
      const double rate = priors.b0 + 0.5 * omega * rss;
      sigma2 = 1.0 / chain.gamma(shape, rate);
    }

    if (iter >= options.burnin) {
      for (int k = 0; k < q; ++k) fit.beta_draws[k].draws.push_back(beta[k]);
      fit.sigma2_draws.draws.push_back(sigma2);
    }
  }
  return fit;
}

ConjugatePosterior conjugate_posterior(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                       const RegressionPriors& priors, double omega,
                                       double sigma2) {
  check_inputs(design, y, omega);
  priors.validate();
  if (!(sigma2 > 0.0)) throw std::invalid_argument("conjugate_posterior: sigma2 must be positive");
  const int q = static_cast<int>(design.cols());
  const Eigen::MatrixXd v0_inv = priors.V0.llt().solve(Eigen::MatrixXd::Identity(q, q));
  const Eigen::MatrixXd prec = v0_inv + (omega / sigma2) * design.transpose() * design;
  ConjugatePosterior post;
  post.covariance = prec.llt().solve(Eigen::MatrixXd::Identity(q, q));
  post.mean = post.covariance * (v0_inv * priors.m0 + (omega / sigma2) * design.transpose() * y);
  return post;
}

GaussianPosterior closed_form_tau_posterior(const Eigen::VectorXd& y, double omega,
                                            double sigma2) {
  if (y.size() == 0) throw std::invalid_argument("closed_form_tau_posterior: empty sample");
  if (!(omega > 0.0)) throw std::invalid_argument("closed_form_tau_posterior: omega must be > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("closed_form_tau_posterior: sigma2 must be > 0");
  GaussianPosterior g;
  g.mean = y.mean();
  g.variance = sigma2 / (omega * static_cast<double>(y.size()));
  return g;
}

PosteriorSummary tau_summary(const RegressionFit& fit, int coefficient_index, double alpha) {
  if (coefficient_index < 0 || coefficient_index >= static_cast<int>(fit.beta_draws.size()))
    throw std::invalid_argument("tau_summary: coefficient index out of range");
  return summarize(fit.beta_draws[coefficient_index], alpha);
}

}  // namespace rbci::regression
