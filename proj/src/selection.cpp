#include "rbci/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbci/causal.hpp"
#include "rbci/stats.hpp"
#include "rbci/rng.hpp"

namespace rbci::selection {

using exec::for_each_index;

void OmegaGrid::validate() const {
  if (values.empty()) throw std::invalid_argument("OmegaGrid: empty grid");
  double prev = 0.0;
  for (double w : values) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("OmegaGrid: values must be > 0");
    if (w <= prev) throw std::invalid_argument("OmegaGrid: values must be strictly increasing");
    prev = w;
  }
}

OmegaGrid OmegaGrid::range(double lo, double step, double hi) {
  OmegaGrid grid;
  for (int k = 0;; ++k) {
    const double w = lo + step * k;
    if (w > hi + 1e-12) break;
    grid.values.push_back(w);
  }
  grid.validate();
  return grid;
}

namespace {

// Argmin of combined score within one K group; exact ties prefer omega
// nearest 1, then smaller omega.
const GridPoint* argmin_point(const GridPoint* a, const GridPoint* b) {
  if (!a) return b;
  if (!b) return a;
  const double sa = a->score.combined, sb = b->score.combined;
  if (sa != sb) return sa < sb ? a : b;
  const double da = std::fabs(a->omega - 1.0), db = std::fabs(b->omega - 1.0);
  if (da != db) return da < db ? a : b;
  return a->omega <= b->omega ? a : b;
}

// Per-K argmin over omega, then the smallest K whose champion is within one
// standard error of the overall champion. CV surfaces across K are flat near
// the truth; the parsimony margin keeps noise-level wins for larger K from
// driving the selection while leaving decisive differences untouched.
const GridPoint* best_point(const std::vector<GridPoint>& surface, int needed_ok) {
  std::map<int, const GridPoint*> champion_of_k;
  for (const auto& p : surface) {
    if (p.n_ok < needed_ok) continue;
    auto& champ = champion_of_k[p.k.value_or(0)];
    champ = argmin_point(champ, &p);
  }
  if (champion_of_k.empty()) return nullptr;
  const GridPoint* overall = nullptr;
  for (const auto& [k, p] : champion_of_k) overall = argmin_point(overall, p);
  for (const auto& [k, p] : champion_of_k)
    if (p->score.combined <= overall->score.combined + overall->se) return p;
  return overall;
}

}  // namespace

SelectionResult select_omega(const OmegaFitFactory& factory,
                             const std::function<double(int)>& truth, const OmegaGrid& grid,
                             int replicates, double alpha, std::uint64_t seed, exec::Exec mode) {
  grid.validate();
  if (replicates < 1) throw std::invalid_argument("select_omega: replicates must be >= 1");

  SelectionResult result;
  result.seed = seed;
  result.surface.resize(grid.values.size());

  for_each_index(static_cast<int>(grid.values.size()), mode, [&](int g) {
    GridPoint point;
    point.omega = grid.values[g];
    std::vector<scoring::ScoreReport> reports;
    for (int r = 0; r < replicates; ++r) {
      const std::uint64_t fit_seed =
          rng::derive(seed, "select/fit", {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(r)});
      GridFit fit;
      try {
        fit = factory(point.omega, r, fit_seed);
      } catch (const std::exception& e) {
        fit.ok = false;
        fit.diagnostic = e.what();
      }
      if (!fit.ok) {
        point.diagnostics.push_back("omega=" + std::to_string(point.omega) + " replicate " +
                                    std::to_string(r) + ": " + fit.diagnostic);
        continue;
      }
      PosteriorSummary s = fit.summary;
      s.alpha = alpha;
      reports.push_back(scoring::combined_score(s, truth(r)));
      ++point.n_ok;
    }
    if (point.n_ok == replicates) {
      point.score = scoring::average_score(reports);
      if (reports.size() > 1) {
        std::vector<double> combined(reports.size());
        for (std::size_t r = 0; r < reports.size(); ++r) combined[r] = reports[r].combined;
        point.se = std::sqrt(stats::variance(combined) / static_cast<double>(combined.size()));
      }
    }
    result.surface[g] = std::move(point);
  });

  const GridPoint* best = best_point(result.surface, replicates);
  if (!best) throw std::runtime_error("select_omega: every grid point failed");
  result.best_omega = best->omega;
  return result;
}

SelectionResult placebo_pipeline(const PanelData& panel, const OmegaGrid& grid,
                                 const PlaceboOptions& options, std::uint64_t seed) {
  panel.validate();
  grid.validate();
  if (options.k_set.empty()) throw std::invalid_argument("placebo_pipeline: empty K set");
  if (!(options.tune_fraction > 0.0 && options.tune_fraction < 1.0) ||
      !(options.pseudo_fraction > 0.0 && options.pseudo_fraction < 1.0))
    throw std::invalid_argument("placebo_pipeline: fractions must be in (0,1)");

  const int n = panel.n_units(), t_len = panel.n_times();

  std::vector<int> pool;
  for (int i = 0; i < n; ++i)
    if (!panel.treatment_start[i]) pool.push_back(i);
  const int n_pseudo =
      std::max(1, static_cast<int>(std::llround(options.pseudo_fraction * pool.size())));
  if (static_cast<int>(pool.size()) - n_pseudo < 2)
    throw std::invalid_argument("placebo_pipeline: too few never-treated units for both masks");

  SelectionResult result;
  result.seed = seed;

  // Pseudo-treated units with staggered placebo starts.
  rng::Stream pick = rng::substream(seed, "placebo/pseudo-units");
  std::vector<int> order = pool;
  for (int j = 0; j < n_pseudo && j + 1 < static_cast<int>(order.size()); ++j) {
    const int p = j + static_cast<int>(pick.uniform_int(order.size() - j));
    std::swap(order[j], order[p]);
  }
  result.pseudo_units.assign(order.begin(), order.begin() + n_pseudo);
  std::sort(result.pseudo_units.begin(), result.pseudo_units.end());

  const int start_lo = options.start_lo.value_or(
      std::max(1, static_cast<int>(std::llround(0.40 * t_len))));
  const int start_hi = options.start_hi.value_or(
      std::min(t_len - 1, static_cast<int>(std::llround(0.95 * t_len))));
  if (start_lo < 1 || start_hi < start_lo || start_hi >= t_len)
    throw std::invalid_argument("placebo_pipeline: invalid placebo start range");

  rng::Stream starts = rng::substream(seed, "placebo/starts");
  result.placebo_starts.assign(n, std::nullopt);
  std::vector<Cell> eval_cells;
  for (int u : result.pseudo_units) {
    const int start =
        start_lo + static_cast<int>(starts.uniform_int(static_cast<std::uint64_t>(start_hi - start_lo + 1)));
    result.placebo_starts[u] = start;
    for (int t = start; t < t_len; ++t)
      if (panel.is_observed(u, t)) eval_cells.push_back({u, t});
  }
  result.eval_mask = CellMask(std::move(eval_cells), n, t_len);
  if (result.eval_mask.empty())
    throw std::invalid_argument("placebo_pipeline: placebo design produced no evaluation cells");

  // Tuning mask over the remaining controls.
  std::vector<char> is_pseudo(n, 0);
  for (int u : result.pseudo_units) is_pseudo[u] = 1;
  result.tune_mask = random_cell_mask(
      panel, options.tune_fraction,
      [&](int i, int t) {
        if (is_pseudo[i] || !panel.is_observed(i, t)) return false;
        if (options.tune_include_pretreatment) return !panel.is_treated_cell(i, t);
        return !panel.treatment_start[i].has_value();
      },
      rng::derive(seed, "placebo/tune"));

  // Treated-regime cells are never usable for the untreated model.
  std::vector<Cell> treated_cells;
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < t_len; ++t)
      if (panel.is_treated_cell(i, t) && panel.is_observed(i, t)) treated_cells.push_back({i, t});
  const CellMask treated_mask(std::move(treated_cells), n, t_len);
  const CellMask base_excluded = treated_mask.unioned(result.eval_mask);
  const CellMask tune_excluded = base_excluded.unioned(result.tune_mask);

  // Score surface over (K, omega), identical masks at every point.
  struct Key {
    int k;
    double omega;
  };
  std::vector<Key> keys;
  for (int k : options.k_set)
    for (double w : grid.values) keys.push_back({k, w});
  result.surface.resize(keys.size());

  // All grid points share masks and chain seeds, so surface differences
  // reflect (K, omega) rather than Monte Carlo noise.
  const int chain_reps = std::max(1, options.chain_replicates);
  for_each_index(static_cast<int>(keys.size()), options.chain.mode, [&](int g) {
    GridPoint point;
    point.k = keys[g].k;
    point.omega = keys[g].omega;
    try {
      factor_model::FactorOptions chain = options.chain;
      chain.mode = exec::Exec::serial;  // grid-level parallelism only
      std::vector<scoring::ScoreReport> reports;
      std::vector<double> cell_combined(result.tune_mask.size(), 0.0);
      for (int rep = 0; rep < chain_reps; ++rep) {
        const auto fit = factor_model::gibbs_factor(
            panel, tune_excluded, keys[g].k, keys[g].omega, options.priors, chain,
            rng::derive(seed, "placebo/chain", {static_cast<std::uint64_t>(rep)}));
        const auto pred = factor_model::posterior_predict(fit, panel, result.tune_mask);
        const auto summaries = factor_model::cell_summaries(pred, options.alpha);
        for (std::size_t c = 0; c < summaries.size(); ++c) {
          const Cell cell = pred.cells[c];
          reports.push_back(
              scoring::combined_score(summaries[c], panel.outcomes(cell.unit, cell.time)));
          cell_combined[c] += reports.back().combined / chain_reps;
        }
      }
      point.score = scoring::average_score(reports);
      if (cell_combined.size() > 1)
        point.se =
            std::sqrt(stats::variance(cell_combined) / static_cast<double>(cell_combined.size()));
      point.n_ok = 1;
    } catch (const std::exception& e) {
      point.diagnostics.push_back(e.what());
    }
    result.surface[g] = std::move(point);
  });

  const GridPoint* best = best_point(result.surface, 1);
  if (!best) throw std::runtime_error("placebo_pipeline: every grid point failed");
  result.best_omega = best->omega;
  result.best_k = best->k;

  // Final refit at the winner on all pre-placebo data; evaluation strictly on
  // the masked placebo outcomes.
  const auto refit = factor_model::gibbs_factor(panel, base_excluded, *result.best_k,
                                                result.best_omega, options.priors, options.chain,
                                                rng::derive(seed, "placebo/refit"));
  const auto pred = factor_model::posterior_predict(refit, panel, result.eval_mask);
  result.eval_cells = pred.cells;
  result.eval_summaries = factor_model::cell_summaries(pred, options.alpha);
  result.eval_truth.reserve(result.eval_cells.size());
  std::vector<scoring::ScoreReport> reports;
  for (std::size_t c = 0; c < result.eval_cells.size(); ++c) {
    const Cell cell = result.eval_cells[c];
    result.eval_truth.push_back(panel.outcomes(cell.unit, cell.time));
    reports.push_back(scoring::combined_score(result.eval_summaries[c], result.eval_truth[c]));
  }
  result.eval_overall = scoring::average_score(reports);
  result.eval_per_time = causal::per_time_evaluation(result.eval_cells, result.eval_summaries,
                                                     result.eval_truth, options.alpha);
  return result;
}

std::vector<SurfaceRow> score_surface_export(const SelectionResult& result) {
  std::vector<SurfaceRow> rows;
  rows.reserve(result.surface.size());
  for (const auto& p : result.surface) {
    SurfaceRow r;
    r.k = p.k;
    r.omega = p.omega;
    r.squared_bias = p.score.squared_bias;
    r.interval_score = p.score.interval_score;
    r.combined = p.score.combined;
    r.n_ok = p.n_ok;
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(), [](const SurfaceRow& a, const SurfaceRow& b) {
    const int ka = a.k.value_or(0), kb = b.k.value_or(0);
    return ka < kb || (ka == kb && a.omega < b.omega);
  });
  return rows;
}

}  // namespace rbci::selection
