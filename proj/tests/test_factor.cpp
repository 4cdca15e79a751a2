#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rbci/factor_model.hpp"
#include "rbci/rng.hpp"
#include "rbci/stats.hpp"

using namespace rbci;
using factor_model::FactorOptions;
using factor_model::FactorPriors;

namespace {

factor_model::FactorFit manual_fit(int kept, int n, int t, int k, double omega, double sigma2,
                                   std::uint64_t seed) {
  factor_model::FactorFit fit;
  fit.n_factors = k;
  fit.omega = omega;
  fit.iterations = kept;
  fit.burnin = 0;
  fit.seed = seed;
  rng::Stream s = rng::substream(seed, "manual-fit");
  for (int m = 0; m < kept; ++m) {
    Eigen::MatrixXd lam(n, k), fac(t, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) lam(i, j) = s.normal();
    for (int u = 0; u < t; ++u)
      for (int j = 0; j < k; ++j) fac(u, j) = s.normal();
    fit.loading_draws.push_back(lam);
    fit.factor_draws.push_back(fac);
  }
  fit.beta_draws.resize(kept, 0);
  fit.sigma2_draws = Eigen::MatrixXd::Constant(kept, n, sigma2);
  return fit;
}

}  // namespace

TEST_SUITE("factor") {

TEST_CASE("noiseless rank-1 panel is reproduced by the posterior mean") {
  const Eigen::MatrixXd y = testing::rank1_matrix(12, 24);
  const PanelData panel = testing::panel_from_matrix(y);
  FactorOptions opt;
  opt.iterations = 1500;
  opt.burnin = 500;
  const auto fit =
      factor_model::gibbs_factor(panel, CellMask{}, 1, 1.0, FactorPriors{}, opt, 77);

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(12, 24);
  for (int m = 0; m < fit.kept(); ++m)
    mean += fit.loading_draws[m] * fit.factor_draws[m].transpose();
  mean /= fit.kept();
  const double max_err = (mean - y).cwiseAbs().maxCoeff();
  CHECK(max_err < 0.05 * y.cwiseAbs().maxCoeff());
}

TEST_CASE("excluded cells never reach the sampler (bitwise)") {
  Eigen::MatrixXd y = testing::rank1_matrix(8, 15);
  rng::Stream noise = rng::substream(5, "noise");
  for (int i = 0; i < 8; ++i)
    for (int t = 0; t < 15; ++t) y(i, t) += 0.3 * noise.normal();
  const CellMask excluded({{1, 3}, {1, 4}, {4, 9}, {6, 0}}, 8, 15);

  FactorOptions opt;
  opt.iterations = 120;
  opt.burnin = 40;
  const PanelData clean = testing::panel_from_matrix(y);
  Eigen::MatrixXd corrupted_y = y;
  for (const auto& c : excluded.cells()) corrupted_y(c.unit, c.time) = 1e9;
  const PanelData corrupted = testing::panel_from_matrix(corrupted_y);

  const auto fa = factor_model::gibbs_factor(clean, excluded, 2, 0.8, FactorPriors{}, opt, 9);
  const auto fb = factor_model::gibbs_factor(corrupted, excluded, 2, 0.8, FactorPriors{}, opt, 9);
  for (int m = 0; m < fa.kept(); ++m) {
    CHECK(fa.loading_draws[m] == fb.loading_draws[m]);
    CHECK(fa.factor_draws[m] == fb.factor_draws[m]);
  }
  CHECK(fa.sigma2_draws == fb.sigma2_draws);
}

TEST_CASE("treated cells must be excluded explicitly") {
  Eigen::MatrixXd y = testing::rank1_matrix(6, 10);
  PanelData panel = testing::panel_from_matrix(y);
  panel.treatment_start[2] = 6;
  FactorOptions opt;
  opt.iterations = 20;
  opt.burnin = 5;
  CHECK_THROWS(factor_model::gibbs_factor(panel, CellMask{}, 1, 1.0, FactorPriors{}, opt, 1));
  std::vector<Cell> treated;
  for (int t = 6; t < 10; ++t) treated.push_back({2, t});
  CHECK_NOTHROW(factor_model::gibbs_factor(panel, CellMask(treated, 6, 10), 1, 1.0,
                                           FactorPriors{}, opt, 1));
}

TEST_CASE("argument validation") {
  const PanelData panel = testing::panel_from_matrix(testing::rank1_matrix(5, 8));
  FactorOptions opt;
  opt.iterations = 10;
  opt.burnin = 2;
  CHECK_THROWS(factor_model::gibbs_factor(panel, CellMask{}, 6, 1.0, FactorPriors{}, opt, 1));
  CHECK_THROWS(factor_model::gibbs_factor(panel, CellMask{}, 1, -0.5, FactorPriors{}, opt, 1));
  CHECK_THROWS(factor_model::gibbs_factor(panel, CellMask{}, 0, 1.0, FactorPriors{}, opt, 1));

  // A unit losing all its cells is rejected.
  std::vector<Cell> all_of_unit0;
  for (int t = 0; t < 8; ++t) all_of_unit0.push_back({0, t});
  CHECK_THROWS(
      factor_model::gibbs_factor(panel, CellMask(all_of_unit0, 5, 8), 1, 1.0, FactorPriors{}, opt, 1));
}

TEST_CASE("posterior_predict mean draws are the exact bilinear form") {
  const auto fit = manual_fit(6, 4, 7, 2, 1.0, 1.0, 3);
  const PanelData panel = testing::panel_from_matrix(Eigen::MatrixXd::Zero(4, 7));
  const CellMask cells({{0, 0}, {2, 5}, {3, 6}}, 4, 7);
  const auto pred = factor_model::posterior_predict(fit, panel, cells);
  for (int m = 0; m < 6; ++m)
    for (std::size_t c = 0; c < pred.cells.size(); ++c) {
      const auto cell = pred.cells[c];
      CHECK(pred.mean_draws(m, static_cast<int>(c)) ==
            fit.loading_draws[m].row(cell.unit).dot(fit.factor_draws[m].row(cell.time)));
    }
}

TEST_CASE("predictive draws add noise: variance grows, omega=4 halves the sd") {
  const auto fit1 = manual_fit(4000, 3, 5, 1, 1.0, 1.3, 11);
  auto fit4 = fit1;
  fit4.omega = 4.0;
  const PanelData panel = testing::panel_from_matrix(Eigen::MatrixXd::Zero(3, 5));
  const CellMask cells({{1, 2}}, 3, 5);
  const auto p1 = factor_model::posterior_predict(fit1, panel, cells);
  const auto p4 = factor_model::posterior_predict(fit4, panel, cells);

  std::vector<double> mean_col(p1.mean_draws.col(0).data(),
                               p1.mean_draws.col(0).data() + p1.mean_draws.rows());
  std::vector<double> out_col(p1.outcome_draws.col(0).data(),
                              p1.outcome_draws.col(0).data() + p1.outcome_draws.rows());
  CHECK(stats::variance(out_col) > stats::variance(mean_col));

  // Same underlying normals, so the noise is exactly halved at omega = 4.
  for (int m = 0; m < 200; ++m) {
    const double n1 = p1.outcome_draws(m, 0) - p1.mean_draws(m, 0);
    const double n4 = p4.outcome_draws(m, 0) - p4.mean_draws(m, 0);
    CHECK(n4 == doctest::Approx(0.5 * n1).epsilon(1e-15));
  }
}

TEST_CASE("cell_summaries: degenerate draws, quantile levels, permutation invariance") {
  factor_model::PredictiveDraws pred;
  pred.cells = {{0, 0}, {0, 1}};
  pred.mean_draws.resize(5, 2);
  pred.outcome_draws.resize(5, 2);
  for (int m = 0; m < 5; ++m) {
    pred.mean_draws(m, 0) = 2.0;
    pred.outcome_draws(m, 0) = 2.0;
    pred.mean_draws(m, 1) = m;
    pred.outcome_draws(m, 1) = m;
  }
  const auto sums = factor_model::cell_summaries(pred, 0.05);
  CHECK(sums[0].mean == 2.0);
  CHECK(sums[0].lower == 2.0);
  CHECK(sums[0].upper == 2.0);

  std::vector<double> col{0, 1, 2, 3, 4};
  CHECK(sums[1].lower == stats::quantile(col, 0.025));
  CHECK(sums[1].upper == stats::quantile(col, 0.975));

  auto permuted = pred;
  permuted.mean_draws.col(1).reverseInPlace();
  permuted.outcome_draws.col(1).reverseInPlace();
  const auto sums2 = factor_model::cell_summaries(permuted, 0.05);
  CHECK(sums2[1].mean == sums[1].mean);
  CHECK(sums2[1].lower == sums[1].lower);
  CHECK(sums2[1].upper == sums[1].upper);
}

TEST_CASE("precision shape identity") {
  CHECK(factor_model::precision_shape(0.01, 1.0, 40) == doctest::Approx(20.01));
  CHECK(factor_model::precision_shape(0.01, 0.5, 40) == doctest::Approx(10.01));
  for (double omega : {0.1, 0.7, 2.4})
    for (long n : {1L, 17L, 300L})
      CHECK(factor_model::precision_shape(0.01, omega, n) == 0.01 + omega * n / 2.0);
}

TEST_CASE("posterior mean of the factor product shrinks to zero as omega -> 0") {
  Eigen::MatrixXd y = testing::rank1_matrix(10, 18);
  rng::Stream noise = rng::substream(4, "shrink-noise");
  for (int i = 0; i < 10; ++i)
    for (int t = 0; t < 18; ++t) y(i, t) += noise.normal();
  const PanelData panel = testing::panel_from_matrix(y);
  FactorOptions opt;
  opt.iterations = 800;
  opt.burnin = 300;

  double prev = 1e300;
  for (double omega : {1.0, 0.1, 0.01}) {
    const auto fit = factor_model::gibbs_factor(panel, CellMask{}, 1, omega, FactorPriors{}, opt, 6);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(10, 18);
    for (int m = 0; m < fit.kept(); ++m)
      mean += fit.loading_draws[m] * fit.factor_draws[m].transpose();
    mean /= fit.kept();
    const double avg_abs = mean.cwiseAbs().mean();
    CHECK(avg_abs < prev);
    prev = avg_abs;
  }
}

}  // TEST_SUITE
