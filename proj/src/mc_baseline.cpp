#include "rbci/mc_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbci/rng.hpp"
#include "rbci/stats.hpp"

namespace rbci::mc_baseline {

using exec::for_each_index;

namespace {

struct ObservedCells {
  std::vector<std::vector<int>> times_of_unit;
  std::vector<std::vector<int>> units_of_time;
};

ObservedCells collect(const Eigen::MatrixXd& y) {
  ObservedCells obs;
  obs.times_of_unit.resize(y.rows());
  obs.units_of_time.resize(y.cols());
  for (int i = 0; i < y.rows(); ++i)
    for (int t = 0; t < y.cols(); ++t)
      if (!std::isnan(y(i, t))) {
        obs.times_of_unit[i].push_back(t);
        obs.units_of_time[t].push_back(i);
      }
  return obs;
}

double objective(const Eigen::MatrixXd& y, const ObservedCells& obs, const Eigen::MatrixXd& u,
                 const Eigen::MatrixXd& v, double ridge) {
  double sse = 0.0;
  for (int i = 0; i < y.rows(); ++i)
    for (int t : obs.times_of_unit[i]) {
      const double r = y(i, t) - u.row(i).dot(v.row(t));
      sse += r * r;
    }
  return sse + ridge * (u.squaredNorm() + v.squaredNorm());
}

MCFit als_on_matrix(const Eigen::MatrixXd& y, int rank, const AlsOptions& options) {
  const int n = static_cast<int>(y.rows()), t_len = static_cast<int>(y.cols());
  const ObservedCells obs = collect(y);
  for (int i = 0; i < n; ++i)
    if (obs.times_of_unit[i].empty())
      throw std::invalid_argument("als_complete: unit row " + std::to_string(i) +
                                  " has no observed cells");
  for (int t = 0; t < t_len; ++t)
    if (obs.units_of_time[t].empty())
      throw std::invalid_argument("als_complete: time column " + std::to_string(t) +
                                  " has no observed cells");

  // Truncated SVD of the zero-imputed matrix as the starting point.
  Eigen::MatrixXd y0 = y;
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < t_len; ++t)
      if (std::isnan(y0(i, t))) y0(i, t) = 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd scale = svd.singularValues().head(rank).array().sqrt();
  MCFit fit;
  fit.rank = rank;
  fit.ridge = options.ridge;
  fit.row_factors = svd.matrixU().leftCols(rank) * scale.asDiagonal();
  fit.col_factors = svd.matrixV().leftCols(rank) * scale.asDiagonal();

  const Eigen::MatrixXd ridge_eye = options.ridge * Eigen::MatrixXd::Identity(rank, rank);
  double prev = objective(y, obs, fit.row_factors, fit.col_factors, options.ridge);
  fit.objective_trace.push_back(prev);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    for_each_index(n, options.mode, [&](int i) {
      Eigen::MatrixXd a = ridge_eye;
      Eigen::VectorXd b = Eigen::VectorXd::Zero(rank);
      for (int t : obs.times_of_unit[i]) {
        const auto v = fit.col_factors.row(t).transpose();
        a.noalias() += v * v.transpose();
        b.noalias() += v * y(i, t);
      }
      fit.row_factors.row(i) = a.llt().solve(b).transpose();
    });
    for_each_index(t_len, options.mode, [&](int t) {
      Eigen::MatrixXd a = ridge_eye;
      Eigen::VectorXd b = Eigen::VectorXd::Zero(rank);
      for (int i : obs.units_of_time[t]) {
        const auto u = fit.row_factors.row(i).transpose();
        a.noalias() += u * u.transpose();
        b.noalias() += u * y(i, t);
      }
      fit.col_factors.row(t) = a.llt().solve(b).transpose();
    });
    const double cur = objective(y, obs, fit.row_factors, fit.col_factors, options.ridge);
    fit.objective_trace.push_back(cur);
    fit.iterations_used = iter + 1;
    if (std::fabs(prev - cur) < options.tol * std::max(prev, 1e-12)) {
      fit.converged = true;
      break;
    }
    prev = cur;
  }
  fit.completed = fit.row_factors * fit.col_factors.transpose();
  return fit;
}

}  // namespace

MCFit als_complete(const PanelData& panel, const CellMask& missing, int rank,
                   const AlsOptions& options, std::uint64_t /*seed*/) {
  panel.validate();
  if (rank < 1 || rank > std::min(panel.n_units(), panel.n_times()))
    throw std::invalid_argument("als_complete: rank must be in [1, min(N,T)]");
  if (options.ridge < 0.0) throw std::invalid_argument("als_complete: ridge must be >= 0");

  Eigen::MatrixXd y = panel.outcomes;
  for (const Cell& c : missing.cells()) y(c.unit, c.time) = std::nan("");
  return als_on_matrix(y, rank, options);
}

BootstrapIntervals wild_bootstrap(const PanelData& panel, const MCFit& fit,
                                  const CellMask& masked, const CellMask& other_missing,
                                  const BootstrapOptions& options, std::uint64_t seed) {
  if (options.replicates < 2) throw std::invalid_argument("wild_bootstrap: need B >= 2");
  if (masked.empty()) throw std::invalid_argument("wild_bootstrap: empty masked set");

  BootstrapIntervals out;
  out.cells = masked.cells();
  out.seed = seed;
  const int nc = static_cast<int>(out.cells.size());

  // Residuals on the masked cells; they need observed reference outcomes.
  std::vector<double> resid(nc);
  std::vector<int> unit_of_cell(nc);
  std::vector<int> test_units;
  for (int c = 0; c < nc; ++c) {
    const Cell cell = out.cells[c];
    if (!panel.is_observed(cell.unit, cell.time))
      throw std::invalid_argument("wild_bootstrap: masked cell lacks a reference outcome");
    resid[c] = panel.outcomes(cell.unit, cell.time) - fit.completed(cell.unit, cell.time);
    unit_of_cell[c] = cell.unit;
    if (test_units.empty() || test_units.back() != cell.unit) test_units.push_back(cell.unit);
  }
  std::sort(test_units.begin(), test_units.end());
  test_units.erase(std::unique(test_units.begin(), test_units.end()), test_units.end());

  double resid_mean = 0.0;
  for (double e : resid) resid_mean += e;
  resid_mean /= nc;
  double pool_var = 0.0;
  for (double e : resid) pool_var += (e - resid_mean) * (e - resid_mean);
  const double pool_sd = nc > 1 ? std::sqrt(pool_var / (nc - 1)) : 0.0;

  // Base matrix for refits: original missing plus any extra exclusions stay
  // missing, the masked cells are re-filled with starred values per replicate.
  Eigen::MatrixXd base = panel.outcomes;
  for (const Cell& c : other_missing.cells()) base(c.unit, c.time) = std::nan("");

  const int B = options.replicates;
  Eigen::MatrixXd draws(B, nc);
  std::vector<char> ok(B, 0);
  std::vector<std::string> diag(B);

  for_each_index(B, options.als.mode, [&](int b) {
    rng::Stream flips = rng::substream(seed, "mc/flips", {static_cast<std::uint64_t>(b)});
    std::vector<double> xi(panel.n_units(), 1.0);
    for (int u : test_units) xi[u] = flips.sign();

    Eigen::MatrixXd starred = base;
    for (int c = 0; c < nc; ++c) {
      const Cell cell = out.cells[c];
      starred(cell.unit, cell.time) = fit.completed(cell.unit, cell.time) + xi[cell.unit] * resid[c];
    }
    try {
      AlsOptions als = options.als;
      als.mode = exec::Exec::serial;  // replicate-level parallelism only
      const MCFit refit = als_on_matrix(starred, fit.rank, als);
      rng::Stream noise = rng::substream(seed, "mc/noise", {static_cast<std::uint64_t>(b)});
      for (int c = 0; c < nc; ++c) {
        const Cell cell = out.cells[c];
        const double innovation = xi[cell.unit] * pool_sd * std::fabs(noise.normal());
        draws(b, c) = refit.completed(cell.unit, cell.time) + innovation;
      }
      ok[b] = 1;
    } catch (const std::exception& e) {
      diag[b] = e.what();
    }
  });

  std::vector<int> kept;
  for (int b = 0; b < B; ++b) {
    if (ok[b])
      kept.push_back(b);
    else
      out.diagnostics.push_back("replicate " + std::to_string(b) + ": " + diag[b]);
  }
  out.replicates_kept = static_cast<int>(kept.size());
  if (out.replicates_kept < static_cast<int>(0.8 * B))
    throw std::runtime_error("wild_bootstrap: more than 20% of replicates failed");

  out.lower.resize(nc);
  out.upper.resize(nc);
  std::vector<double> col(kept.size());
  for (int c = 0; c < nc; ++c) {
    for (std::size_t j = 0; j < kept.size(); ++j) col[j] = draws(kept[j], c);
    out.lower[c] = stats::quantile(col, 0.025);
    out.upper[c] = stats::quantile(col, 0.975);
  }
  return out;
}

std::vector<CellScore> mc_evaluate(const MCFit& fit, const BootstrapIntervals& intervals,
                                   const std::vector<double>& truth, double alpha) {
  if (truth.size() != intervals.cells.size())
    throw std::invalid_argument("mc_evaluate: truth size mismatch");
  std::vector<CellScore> out(intervals.cells.size());
  for (std::size_t c = 0; c < intervals.cells.size(); ++c) {
    const Cell cell = intervals.cells[c];
    CellScore cs;
    cs.cell = cell;
    cs.summary.mean = fit.completed(cell.unit, cell.time);
    cs.summary.lower = intervals.lower[c];
    cs.summary.upper = intervals.upper[c];
    cs.summary.alpha = alpha;
    cs.score = scoring::combined_score(cs.summary, truth[c]);
    out[c] = cs;
  }
  return out;
}

}  // namespace rbci::mc_baseline
