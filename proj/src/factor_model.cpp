#include "rbci/factor_model.hpp"

#include <cmath>
#include <stdexcept>

#include "rbci/rng.hpp"
#include "rbci/stats.hpp"

namespace rbci::factor_model {

using exec::for_each_index;

void FactorPriors::validate(int n_covariates) const {
  if (!(loading_scale > 0.0)) throw std::invalid_argument("FactorPriors: loading_scale must be > 0");
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("FactorPriors: a, b must be > 0");
  if (n_covariates > 0) {
    if (!beta_cov) throw std::invalid_argument("FactorPriors: beta_cov required with covariates");
    if (beta_cov->rows() != n_covariates || beta_cov->cols() != n_covariates)
      throw std::invalid_argument("FactorPriors: beta_cov shape mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(*beta_cov);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("FactorPriors: beta_cov must be positive definite");
  }
}

namespace {

struct IncludedCells {
  std::vector<std::vector<int>> times_of_unit;  // included t per unit
  std::vector<std::vector<int>> units_of_time;  // included i per time
  long total = 0;
};

IncludedCells collect_included(const PanelData& panel, const CellMask& excluded) {
  IncludedCells inc;
  inc.times_of_unit.resize(panel.n_units());
  inc.units_of_time.resize(panel.n_times());
  for (int i = 0; i < panel.n_units(); ++i) {
    for (int t = 0; t < panel.n_times(); ++t) {
      if (!panel.is_observed(i, t) || excluded.contains(i, t)) continue;
      if (panel.is_treated_cell(i, t))
        throw std::invalid_argument(
            "gibbs_factor: treated-regime cell (" + panel.unit_ids[i] + "," + panel.time_ids[t] +
            ") must be excluded");
      inc.times_of_unit[i].push_back(t);
      inc.units_of_time[t].push_back(i);
      ++inc.total;
    }
  }
  return inc;
}

Eigen::VectorXd draw_gaussian(const Eigen::MatrixXd& prec, const Eigen::VectorXd& rhs,
                              rng::Stream& stream) {
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gibbs_factor: conditional precision not positive definite");
  const Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd z(prec.rows());
  for (int k = 0; k < z.size(); ++k) z[k] = stream.normal();
  return mean + llt.matrixU().solve(z);
}

}  // namespace

FactorFit gibbs_factor(const PanelData& panel, const CellMask& excluded, int n_factors,
                       double omega, const FactorPriors& priors, const FactorOptions& options,
                       std::uint64_t seed) {
  panel.validate();
  const int n = panel.n_units(), t_len = panel.n_times(), p = panel.n_covariates();
  priors.validate(p);
  if (n_factors < 1 || n_factors > std::min(n, t_len))
    throw std::invalid_argument("gibbs_factor: K must be in [1, min(N,T)]");
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw std::invalid_argument("gibbs_factor: omega must be positive");
  if (options.iterations <= options.burnin || options.burnin < 0)
    throw std::invalid_argument("gibbs_factor: need iterations > burnin >= 0");
  if (options.fixed_sigma2 && !(*options.fixed_sigma2 > 0.0))
    throw std::invalid_argument("gibbs_factor: fixed sigma2 must be positive");

  const IncludedCells inc = collect_included(panel, excluded);
  for (int i = 0; i < n; ++i) {
    if (inc.times_of_unit[i].empty())
      throw std::invalid_argument("gibbs_factor: unit " + panel.unit_ids[i] +
                                  " has no included cells");
    if (static_cast<int>(inc.times_of_unit[i].size()) < n_factors)
      throw std::invalid_argument("gibbs_factor: unit " + panel.unit_ids[i] +
                                  " retains fewer than K cells");
  }

  const int K = n_factors;
  const int kept = options.iterations - options.burnin;

  FactorFit fit;
  fit.n_factors = K;
  fit.omega = omega;
  fit.iterations = options.iterations;
  fit.burnin = options.burnin;
  fit.seed = seed;
  fit.loading_draws.reserve(kept);
  fit.factor_draws.reserve(kept);
  fit.beta_draws.resize(kept, p);
  fit.sigma2_draws.resize(kept, n);

  // State
  Eigen::MatrixXd lambda(n, K), factors(t_len, K);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sigma2 = Eigen::VectorXd::Constant(n, options.fixed_sigma2.value_or(1.0));

  for_each_index(n, options.mode, [&](int i) {
    rng::Stream s = rng::substream(seed, "factor/init-loading", {static_cast<std::uint64_t>(i)});
    for (int k = 0; k < K; ++k) lambda(i, k) = std::sqrt(priors.loading_scale) * s.normal();
  });
  for_each_index(t_len, options.mode, [&](int t) {
    rng::Stream s = rng::substream(seed, "factor/init-factor", {static_cast<std::uint64_t>(t)});
    for (int k = 0; k < K; ++k) factors(t, k) = s.normal();
  });

  Eigen::MatrixXd beta_cov_inv;
  if (p > 0)
    beta_cov_inv = priors.beta_cov->llt().solve(Eigen::MatrixXd::Identity(p, p));

  // Covariate contribution X_it' beta cached per iteration.
  Eigen::MatrixXd xbeta = Eigen::MatrixXd::Zero(n, t_len);
  auto refresh_xbeta = [&]() {
    if (p == 0) return;
    xbeta.setZero();
    for (int k = 0; k < p; ++k) xbeta += beta[k] * panel.covariates[k];
  };

  // Per-unit partial accumulators for the beta step (ordered reduction).
  std::vector<Eigen::MatrixXd> beta_prec_part(p > 0 ? n : 0);
  std::vector<Eigen::VectorXd> beta_rhs_part(p > 0 ? n : 0);
  std::vector<double> rss_part(n, 0.0);

  const bool update_sigma = !options.fixed_sigma2.has_value();

  for (int iter = 0; iter < options.iterations; ++iter) {
    const std::uint64_t it = static_cast<std::uint64_t>(iter);
    refresh_xbeta();

    // Loadings, independent across units given factors.
    for_each_index(n, options.mode, [&](int i) {
      rng::Stream s = rng::substream(seed, "factor/loading", {it, static_cast<std::uint64_t>(i)});
      const double w = omega / sigma2[i];
      Eigen::MatrixXd prec =
          Eigen::MatrixXd::Identity(K, K) / priors.loading_scale;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K);
      for (int t : inc.times_of_unit[i]) {
        const auto f = factors.row(t).transpose();
        prec.noalias() += w * f * f.transpose();
        rhs.noalias() += w * f * (panel.outcomes(i, t) - xbeta(i, t));
      }
      lambda.row(i) = draw_gaussian(prec, rhs, s).transpose();
    });

    // Factors, independent across times given loadings.
    for_each_index(t_len, options.mode, [&](int t) {
      rng::Stream s = rng::substream(seed, "factor/factor", {it, static_cast<std::uint64_t>(t)});
      Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(K, K);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K);
      for (int i : inc.units_of_time[t]) {
        const double w = omega / sigma2[i];
        const auto l = lambda.row(i).transpose();
        prec.noalias() += w * l * l.transpose();
        rhs.noalias() += w * l * (panel.outcomes(i, t) - xbeta(i, t));
      }
      factors.row(t) = draw_gaussian(prec, rhs, s).transpose();
    });

    // Covariate coefficients: per-unit partial sums first, then a serial
    // combine in unit order so the reduction is independent of scheduling.
    if (p > 0) {
      for_each_index(n, options.mode, [&](int i) {
        Eigen::MatrixXd prec_i = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd rhs_i = Eigen::VectorXd::Zero(p);
        const double w = omega / sigma2[i];
        for (int t : inc.times_of_unit[i]) {
          const Eigen::VectorXd x = panel.covariate_row(i, t);
          prec_i.noalias() += w * x * x.transpose();
          rhs_i.noalias() += w * x * (panel.outcomes(i, t) - lambda.row(i).dot(factors.row(t)));
        }
        beta_prec_part[i] = std::move(prec_i);
        beta_rhs_part[i] = std::move(rhs_i);
      });
      Eigen::MatrixXd prec = beta_cov_inv;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
      for (int i = 0; i < n; ++i) {
        prec += beta_prec_part[i];
        rhs += beta_rhs_part[i];
      }
      rng::Stream s = rng::substream(seed, "factor/beta", {it});
      beta = draw_gaussian(prec, rhs, s);
      refresh_xbeta();
    }

    // Unit precisions.
    if (update_sigma) {
      for_each_index(n, options.mode, [&](int i) {
        double rss = 0.0;
        for (int t : inc.times_of_unit[i]) {
          const double r = panel.outcomes(i, t) - lambda.row(i).dot(factors.row(t)) - xbeta(i, t);
          rss += r * r;
        }
        rss_part[i] = rss;
      });
      if (options.variance == VarianceMode::per_unit) {
        for_each_index(n, options.mode, [&](int i) {
          rng::Stream s = rng::substream(seed, "factor/sigma", {it, static_cast<std::uint64_t>(i)});
          const double shape =
              precision_shape(priors.a, omega, static_cast<long>(inc.times_of_unit[i].size()));
          const double rate = priors.b + 0.5 * omega * rss_part[i];
          sigma2[i] = 1.0 / s.gamma(shape, rate);
        });
      } else {
        double rss = 0.0;
        for (int i = 0; i < n; ++i) rss += rss_part[i];
        rng::Stream s = rng::substream(seed, "factor/sigma", {it});
        const double shape = precision_shape(priors.a, omega, inc.total);
        const double rate = priors.b + 0.5 * omega * rss;
        sigma2.setConstant(1.0 / s.gamma(shape, rate));
      }
    }

    if (iter >= options.burnin) {
      const int m = iter - options.burnin;
      fit.loading_draws.push_back(lambda);
      fit.factor_draws.push_back(factors);
      if (p > 0) fit.beta_draws.row(m) = beta.transpose();
      fit.sigma2_draws.row(m) = sigma2.transpose();
    }
  }
  return fit;
}

PredictiveDraws posterior_predict(const FactorFit& fit, const PanelData& panel,
                                  const CellMask& cells) {
  const int kept = fit.kept();
  if (kept < 2) throw std::invalid_argument("posterior_predict: fit has fewer than 2 draws");
  const int p = panel.n_covariates();

  PredictiveDraws pred;
  pred.cells = cells.cells();
  pred.omega = fit.omega;
  const int nc = static_cast<int>(pred.cells.size());
  pred.mean_draws.resize(kept, nc);
  pred.outcome_draws.resize(kept, nc);

  for (int c = 0; c < nc; ++c) {
    const auto [i, t] = pred.cells[c];
    if (i < 0 || i >= panel.n_units() || t < 0 || t >= panel.n_times())
      throw std::invalid_argument("posterior_predict: cell out of range");
    for (int m = 0; m < kept; ++m) {
      double mu = fit.loading_draws[m].row(i).dot(fit.factor_draws[m].row(t));
      if (p > 0) mu += fit.beta_draws.row(m).dot(panel.covariate_row(i, t));
      // Noise stream keyed by (draw, unit, time): independent of cell
      // enumeration order.
      rng::Stream s = rng::substream(
          fit.seed, "factor/predict",
          {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(i),
           static_cast<std::uint64_t>(t)});
      const double sd = std::sqrt(fit.sigma2_draws(m, i) / fit.omega);
      pred.mean_draws(m, c) = mu;
      pred.outcome_draws(m, c) = mu + sd * s.normal();
    }
  }
  return pred;
}

std::vector<PosteriorSummary> cell_summaries(const PredictiveDraws& pred, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("cell_summaries: alpha must be in (0,1)");
  if (pred.mean_draws.rows() < 2) throw std::invalid_argument("cell_summaries: empty draws");
  std::vector<PosteriorSummary> out(pred.cells.size());
  std::vector<double> col(pred.outcome_draws.rows());
  for (std::size_t c = 0; c < pred.cells.size(); ++c) {
    PosteriorSummary s;
    s.alpha = alpha;
    s.mean = pred.mean_draws.col(static_cast<int>(c)).mean();
    for (int m = 0; m < pred.outcome_draws.rows(); ++m)
      col[m] = pred.outcome_draws(m, static_cast<int>(c));
    s.lower = stats::quantile(col, alpha / 2.0);
    s.upper = stats::quantile(col, 1.0 - alpha / 2.0);
    out[c] = s;
  }
  return out;
}

}  // namespace rbci::factor_model
