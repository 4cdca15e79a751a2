#include <doctest.h>

#include <cmath>

#include "rbci/factor_model.hpp"
#include "rbci/simgen.hpp"
#include "rbci/stats.hpp"

using namespace rbci;
using simgen::PanelSimConfig;

TEST_SUITE("simgen") {

TEST_CASE("confounder scaling gives unit variance") {
  const auto sim = simgen::simulate_cross_section(100000, 0.0, 1.0, 1);
  std::vector<double> u(sim.u.data(), sim.u.data() + sim.u.size());
  CHECK(std::fabs(stats::variance(u) - 1.0) < 0.05);
}

TEST_CASE("treated share reference value") {
  // Frozen from a 4e6-draw Monte Carlo reference run: mean(D) ~ 0.6079.
  const auto sim = simgen::simulate_cross_section(1000000, 0.3, 1.0, 2);
  CHECK(sim.d.mean() == doctest::Approx(0.6079).epsilon(0.01));
  CHECK(sim.d.mean() > 0.5);
}

TEST_CASE("gamma=0 removes the confounder from the outcome") {
  const auto sim = simgen::simulate_cross_section(200000, 0.0, 1.0, 3);
  // Partial association of the structural residual with U vanishes.
  Eigen::VectorXd resid = sim.y - sim.tau_true * sim.d - sim.x1;
  const double cov = (resid.array() - resid.mean()).cwiseProduct(sim.u.array() - sim.u.mean()).mean();
  CHECK(std::fabs(cov) < 0.01);

  const auto sim_conf = simgen::simulate_cross_section(200000, 1.0, 1.0, 3);
  Eigen::VectorXd resid_conf = sim_conf.y - sim_conf.tau_true * sim_conf.d - sim_conf.x1;
  const double cov_conf =
      (resid_conf.array() - resid_conf.mean()).cwiseProduct(sim_conf.u.array() - sim_conf.u.mean()).mean();
  CHECK(cov_conf > 0.5);
}

TEST_CASE("panel generator determinism and defaults") {
  PanelSimConfig config;
  const auto a = simgen::simulate_panel(config, 11);
  const auto b = simgen::simulate_panel(config, 11);
  const auto c = simgen::simulate_panel(config, 12);
  CHECK(a.panel.outcomes == b.panel.outcomes);
  CHECK(a.panel.outcomes != c.panel.outcomes);
  CHECK(a.panel.n_units() == 30);
  CHECK(a.panel.n_times() == 100);
  CHECK(a.true_k == 2);
  for (int i = 0; i < 30; ++i) {
    REQUIRE(a.panel.treatment_start[i].has_value());
    CHECK(*a.panel.treatment_start[i] >= 40);
    CHECK(*a.panel.treatment_start[i] <= 95);
  }
}

TEST_CASE("true tau is zero off the treated regime") {
  PanelSimConfig config;
  config.tau_spec.kind = simgen::TauSpec::Kind::ramp;
  const auto sim = simgen::simulate_panel(config, 21);
  for (int i = 0; i < sim.panel.n_units(); ++i)
    for (int t = 0; t < sim.panel.n_times(); ++t)
      if (!sim.panel.is_treated_cell(i, t)) CHECK(sim.true_tau(i, t) == 0.0);
}

TEST_CASE("starts at or beyond T produce an all-control panel") {
  PanelSimConfig config;
  config.n_times = 50;
  config.start_lo = 50;
  config.start_hi = 60;
  const auto sim = simgen::simulate_panel(config, 31);
  for (int i = 0; i < sim.panel.n_units(); ++i)
    CHECK_FALSE(sim.panel.treatment_start[i].has_value());
  CHECK(sim.true_tau.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("treated cells carry no confounder contribution") {
  PanelSimConfig weak, strong;
  weak.beta_u = 0.0;
  strong.beta_u = 5.0;
  const auto a = simgen::simulate_panel(weak, 41);
  const auto b = simgen::simulate_panel(strong, 41);
  for (int i = 0; i < a.panel.n_units(); ++i)
    for (int t = 0; t < a.panel.n_times(); ++t) {
      if (a.panel.is_treated_cell(i, t)) {
        CHECK(a.panel.outcomes(i, t) == b.panel.outcomes(i, t));
      } else {
        CHECK(a.panel.outcomes(i, t) != b.panel.outcomes(i, t));
      }
    }
}

TEST_CASE("treated fraction controls the never-treated pool") {
  PanelSimConfig config;
  config.treated_fraction = 0.5;
  const auto sim = simgen::simulate_panel(config, 51);
  int treated = 0;
  for (const auto& s : sim.panel.treatment_start) treated += s.has_value();
  CHECK(treated == 15);
}

TEST_CASE("held-out error of the true-K working model grows with beta_u") {
  // Fit the omega=1, K=2 factor model on each panel with a fixed mask and
  // compare held-out squared errors across confounding levels.
  const CellMask mask({{0, 30}, {3, 12}, {5, 33}, {8, 21}, {11, 7}, {14, 36},
                       {16, 18}, {19, 28}},
                      20, 40);
  double prev = -1.0;
  for (double beta_u : {0.0, 1.0, 2.0, 5.0}) {
    simgen::PanelSimConfig config;
    config.n_units = 20;
    config.n_times = 40;
    config.n_factors = 2;
    config.beta_u = beta_u;
    config.treated_fraction = 0.0;
    const auto sim = simgen::simulate_panel(config, 61);

    factor_model::FactorOptions opt;
    opt.iterations = 600;
    opt.burnin = 200;
    const auto fit = factor_model::gibbs_factor(sim.panel, mask, 2, 1.0,
                                                factor_model::FactorPriors{}, opt, 9);
    const auto pred = factor_model::posterior_predict(fit, sim.panel, mask);
    const auto sums = factor_model::cell_summaries(pred, 0.05);
    double mse = 0.0;
    for (std::size_t c = 0; c < sums.size(); ++c) {
      const auto cell = pred.cells[c];
      const double e = sums[c].mean - sim.panel.outcomes(cell.unit, cell.time);
      mse += e * e;
    }
    mse /= static_cast<double>(sums.size());
    CHECK(mse > prev);
    prev = mse;
  }
}

}  // TEST_SUITE
