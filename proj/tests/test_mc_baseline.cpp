#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rbci/mc_baseline.hpp"
#include "rbci/rng.hpp"

using namespace rbci;
using mc_baseline::AlsOptions;
using mc_baseline::BootstrapOptions;

namespace {

Eigen::MatrixXd seeded_rank1(int n, int t, std::uint64_t seed) {
  rng::Stream s = rng::substream(seed, "als-rank1");
  Eigen::VectorXd u(n), v(t);
  for (int i = 0; i < n; ++i) u[i] = 1.0 + 0.5 * s.normal();
  for (int k = 0; k < t; ++k) v[k] = 1.0 + 0.5 * s.normal();
  return u * v.transpose();
}

}  // namespace

TEST_SUITE("mc_baseline") {

TEST_CASE("fully observed noiseless rank-1 matrix is recovered") {
  const Eigen::MatrixXd y = seeded_rank1(15, 20, 1);
  const PanelData panel = testing::panel_from_matrix(y);
  AlsOptions opt;
  opt.ridge = 1e-6;
  const auto fit = mc_baseline::als_complete(panel, CellMask{}, 1, opt, 0);
  CHECK(fit.converged);
  CHECK((fit.completed - y).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("rank-1 with 20% missing cells imputes to 1e-3") {
  const Eigen::MatrixXd y = seeded_rank1(15, 20, 2);
  const PanelData panel = testing::panel_from_matrix(y);
  const auto missing = random_cell_mask(panel, 0.2, [](int, int) { return true; }, 3);
  AlsOptions opt;
  opt.ridge = 1e-6;
  const auto fit = mc_baseline::als_complete(panel, missing, 1, opt, 0);
  double max_err = 0.0;
  for (const auto& c : missing.cells())
    max_err = std::max(max_err, std::fabs(fit.completed(c.unit, c.time) - y(c.unit, c.time)));
  CHECK(max_err < 1e-3);
}

TEST_CASE("huge ridge shrinks the completion toward zero") {
  const Eigen::MatrixXd y = seeded_rank1(10, 12, 4);
  const PanelData panel = testing::panel_from_matrix(y);
  AlsOptions opt;
  opt.ridge = 1e8;
  const auto fit = mc_baseline::als_complete(panel, CellMask{}, 2, opt, 0);
  CHECK(fit.completed.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("objective trace is non-increasing") {
  rng::Stream s = rng::substream(9, "als-noise");
  Eigen::MatrixXd y = seeded_rank1(20, 25, 5);
  for (int i = 0; i < 20; ++i)
    for (int t = 0; t < 25; ++t) y(i, t) += 0.5 * s.normal();
  const PanelData panel = testing::panel_from_matrix(y);
  const auto missing = random_cell_mask(panel, 0.15, [](int, int) { return true; }, 6);
  AlsOptions opt;
  const auto fit = mc_baseline::als_complete(panel, missing, 2, opt, 0);
  for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
    CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1] + 1e-9);
}

TEST_CASE("degenerate rows or columns are rejected") {
  const Eigen::MatrixXd y = seeded_rank1(5, 6, 7);
  const PanelData panel = testing::panel_from_matrix(y);
  std::vector<Cell> row0;
  for (int t = 0; t < 6; ++t) row0.push_back({0, t});
  AlsOptions opt;
  CHECK_THROWS(mc_baseline::als_complete(panel, CellMask(row0, 5, 6), 1, opt, 0));
  CHECK_THROWS(mc_baseline::als_complete(panel, CellMask{}, 9, opt, 0));
}

TEST_CASE("bootstrap defaults and determinism") {
  CHECK(BootstrapOptions{}.replicates == 200);

  rng::Stream s = rng::substream(13, "boot-noise");
  Eigen::MatrixXd y = seeded_rank1(12, 16, 8);
  for (int i = 0; i < 12; ++i)
    for (int t = 0; t < 16; ++t) y(i, t) += 0.3 * s.normal();
  const PanelData panel = testing::panel_from_matrix(y);
  std::vector<Cell> masked;
  for (int t = 10; t < 16; ++t) {
    masked.push_back({2, t});
    masked.push_back({7, t});
  }
  const CellMask mask(masked, 12, 16);
  AlsOptions als;
  const auto fit = mc_baseline::als_complete(panel, mask, 1, als, 0);
  BootstrapOptions opt;
  opt.replicates = 40;
  opt.als = als;
  const auto a = mc_baseline::wild_bootstrap(panel, fit, mask, CellMask{}, opt, 21);
  const auto b = mc_baseline::wild_bootstrap(panel, fit, mask, CellMask{}, opt, 21);
  const auto c = mc_baseline::wild_bootstrap(panel, fit, mask, CellMask{}, opt, 22);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  CHECK(a.lower != c.lower);
  CHECK(a.replicates_kept == 40);
  for (std::size_t k = 0; k < a.cells.size(); ++k) CHECK(a.lower[k] <= a.upper[k]);
}

TEST_CASE("zero residuals collapse the intervals to points") {
  const Eigen::MatrixXd y = seeded_rank1(10, 14, 9);
  const PanelData panel = testing::panel_from_matrix(y);
  std::vector<Cell> masked;
  for (int t = 9; t < 14; ++t) masked.push_back({4, t});
  const CellMask mask(masked, 10, 14);
  AlsOptions als;
  als.ridge = 1e-6;
  const auto fit = mc_baseline::als_complete(panel, mask, 1, als, 0);

  // Replace the masked outcomes by the fitted values: residuals become zero.
  PanelData exact = panel;
  for (const auto& c : mask.cells()) exact.outcomes(c.unit, c.time) = fit.completed(c.unit, c.time);
  BootstrapOptions opt;
  opt.replicates = 16;
  opt.als = als;
  const auto intervals = mc_baseline::wild_bootstrap(exact, fit, mask, CellMask{}, opt, 5);
  for (std::size_t k = 0; k < intervals.cells.size(); ++k)
    CHECK(intervals.lower[k] == intervals.upper[k]);
}

TEST_CASE("mc_evaluate: perfect fit with degenerate intervals scores zero") {
  const Eigen::MatrixXd y = seeded_rank1(8, 9, 10);
  const PanelData panel = testing::panel_from_matrix(y);
  std::vector<Cell> masked{{1, 5}, {1, 6}};
  const CellMask mask(masked, 8, 9);

  mc_baseline::MCFit fit;
  fit.completed = y;
  mc_baseline::BootstrapIntervals intervals;
  intervals.cells = masked;
  intervals.lower = {y(1, 5), y(1, 6)};
  intervals.upper = {y(1, 5), y(1, 6)};
  const std::vector<double> truth{y(1, 5), y(1, 6)};
  const auto scores = mc_baseline::mc_evaluate(fit, intervals, truth, 0.05);
  REQUIRE(scores.size() == masked.size());  // one score per masked cell
  for (const auto& cs : scores) CHECK(cs.score.combined == 0.0);
}

}  // TEST_SUITE
