#include "rbci/simgen.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rbci/rng.hpp"

namespace rbci::simgen {

namespace {
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
const double kHalfNormalScale = std::sqrt(1.0 - 2.0 / M_PI);
}  // namespace

CrossSectionSim simulate_cross_section(int n, double gamma, double tau_true, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("simulate_cross_section: n must be >= 1");
  CrossSectionSim sim;
  sim.gamma = gamma;
  sim.tau_true = tau_true;
  sim.y.resize(n);
  sim.d.resize(n);
  sim.x1.resize(n);
  sim.x2.resize(n);
  sim.x3.resize(n);
  sim.u.resize(n);
  rng::Stream s = rng::substream(seed, "simgen/cross-section");
  for (int i = 0; i < n; ++i) {
    const double x1 = s.normal(), x2 = s.normal(), x3 = s.normal();
    const double u = std::fabs(x1) / kHalfNormalScale;
    const double p = expit(0.4 * u + 0.4 * x2 + 0.8 * x3);
    const double d = s.bernoulli(p) ? 1.0 : 0.0;
    const double y = tau_true * d + x1 + gamma * u + s.normal();
    sim.x1[i] = x1;
    sim.x2[i] = x2;
    sim.x3[i] = x3;
    sim.u[i] = u;
    sim.d[i] = d;
    sim.y[i] = y;
  }
  return sim;
}

PanelSim simulate_panel(const PanelSimConfig& config, std::uint64_t seed) {
  const int n = config.n_units, t_len = config.n_times, k = config.n_factors;
  if (n < 2 || t_len < 2) throw std::invalid_argument("simulate_panel: need N >= 2, T >= 2");
  if (k < 1) throw std::invalid_argument("simulate_panel: K must be >= 1");
  if (!(config.treated_fraction >= 0.0 && config.treated_fraction <= 1.0))
    throw std::invalid_argument("simulate_panel: treated_fraction must be in [0,1]");
  const bool any_treated = config.treated_fraction > 0.0;
  // Starts drawn at or beyond T leave the unit never treated.
  if (any_treated && (config.start_lo < 1 || config.start_hi < config.start_lo))
    throw std::invalid_argument("simulate_panel: invalid start range");

  PanelSim sim;
  sim.beta_u = config.beta_u;
  sim.true_k = k;

  sim.loadings.resize(n, k);
  sim.factors.resize(t_len, k);
  sim.latent_u.resize(n, t_len);
  sim.true_tau = Eigen::MatrixXd::Zero(n, t_len);

  rng::Stream s_lam = rng::substream(seed, "simgen/loadings");
  rng::Stream s_fac = rng::substream(seed, "simgen/factors");
  rng::Stream s_u = rng::substream(seed, "simgen/confounder");
  rng::Stream s_eps = rng::substream(seed, "simgen/noise");
  rng::Stream s_starts = rng::substream(seed, "simgen/starts");
  rng::Stream s_pick = rng::substream(seed, "simgen/treated-set");

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) sim.loadings(i, j) = s_lam.normal();
  for (int t = 0; t < t_len; ++t)
    for (int j = 0; j < k; ++j) sim.factors(t, j) = s_fac.normal();
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < t_len; ++t) sim.latent_u(i, t) = std::fabs(s_u.normal()) / kHalfNormalScale;

  // Treated subset: partial Fisher-Yates over unit indices.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  const int n_treated = static_cast<int>(std::llround(config.treated_fraction * n));
  for (int j = 0; j < n_treated && j + 1 < n; ++j) {
    const int pick = j + static_cast<int>(s_pick.uniform_int(static_cast<std::uint64_t>(n - j)));
    std::swap(order[j], order[pick]);
  }
  std::vector<std::optional<int>> start(n);
  for (int j = 0; j < n_treated; ++j) {
    const int span = config.start_hi - config.start_lo + 1;
    const int drawn = config.start_lo +
                      static_cast<int>(s_starts.uniform_int(static_cast<std::uint64_t>(span)));
    if (drawn < t_len) start[order[j]] = drawn;
  }

  PanelData panel;
  panel.unit_ids.reserve(n);
  panel.time_ids.reserve(t_len);
  for (int i = 0; i < n; ++i) panel.unit_ids.push_back("u" + std::to_string(i + 1));
  for (int t = 0; t < t_len; ++t) panel.time_ids.push_back(std::to_string(t + 1));
  panel.treatment_start = start;
  panel.outcomes.resize(n, t_len);

  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < t_len; ++t) {
      const bool treated = start[i].has_value() && t >= *start[i];
      double tau = 0.0;
      if (treated) {
        switch (config.tau_spec.kind) {
          case TauSpec::Kind::constant:
            tau = config.tau_spec.value;
            break;
          case TauSpec::Kind::ramp:
            tau = config.tau_spec.base + config.tau_spec.slope * static_cast<double>(t - *start[i]);
            break;
        }
      }
      sim.true_tau(i, t) = tau;
      const double structural = sim.loadings.row(i).dot(sim.factors.row(t));
      const double confound = treated ? 0.0 : config.beta_u * sim.latent_u(i, t);
      panel.outcomes(i, t) = tau + structural + confound + s_eps.normal();
    }
  }
  panel.validate();
  sim.panel = std::move(panel);
  return sim;
}

}  // namespace rbci::simgen
