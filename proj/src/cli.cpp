#include "rbci/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "rbci/causal.hpp"
#include "rbci/exec.hpp"
#include "rbci/factor_model.hpp"
#include "rbci/mc_baseline.hpp"
#include "rbci/panel_io.hpp"
#include "rbci/regression.hpp"
#include "rbci/rng.hpp"
#include "rbci/selection.hpp"
#include "rbci/simgen.hpp"

namespace rbci::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string digest_of(const std::string& command, std::uint64_t seed, const json& params) {
  json j;
  j["command"] = command;
  j["seed"] = seed;
  j["params"] = params;
  char buf[24];
  std::snprintf(buf, sizeof(buf), "fnv64:%016llx",
                static_cast<unsigned long long>(rng::fnv1a(j.dump())));
  return buf;
}

void write_config(const fs::path& out_dir, const std::string& command, std::uint64_t seed,
                  const json& params, const json& io_section, const std::string& digest) {
  json j;
  j["command"] = command;
  j["version"] = 1;
  j["seed"] = seed;
  j["params"] = params;
  j["io"] = io_section;
  j["digest"] = digest;
  std::ofstream out(out_dir / "config.json");
  out << j.dump(2) << "\n";
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

/// Loads a config echo and hard-errors when its digest does not match its
/// own recorded parameters.
json load_checked_config(const std::string& path, const std::string& expect_command) {
  const json j = load_json(path);
  const std::string recomputed =
      digest_of(j.at("command"), j.at("seed").get<std::uint64_t>(), j.at("params"));
  if (recomputed != j.at("digest").get<std::string>())
    throw std::runtime_error("config digest mismatch in " + path +
                             " (file edited since the run?)");
  if (!expect_command.empty() && j.at("command") != expect_command)
    throw std::runtime_error("config in " + path + " belongs to command '" +
                             std::string(j.at("command")) + "'");
  return j;
}

std::optional<std::string> preparse_config(const std::vector<std::string>& args) {
  for (std::size_t k = 0; k + 1 < args.size(); ++k)
    if (args[k] == "--config") return args[k + 1];
  return std::nullopt;
}

selection::OmegaGrid parse_omega_grid(const std::string& spec) {
  selection::OmegaGrid grid;
  if (spec.find(':') != std::string::npos) {
    double lo, step, hi;
    char c1, c2;
    std::istringstream ss(spec);
    if (!(ss >> lo >> c1 >> step >> c2 >> hi) || c1 != ':' || c2 != ':')
      throw std::runtime_error("bad omega grid '" + spec + "', expected lo:step:hi");
    return selection::OmegaGrid::range(lo, step, hi);
  }
  std::istringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) grid.values.push_back(std::stod(tok));
  grid.validate();
  return grid;
}

std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> out;
  std::istringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

std::vector<std::string> parse_string_list(const std::string& spec) {
  std::vector<std::string> out;
  if (spec.empty()) return out;
  std::istringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

std::string fmt(double v) { return io::format_double(v); }

// Generic column file: header + numeric columns (cross-sectional data).
struct ColumnFile {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> columns;

  const std::vector<double>& at(const std::string& name) const {
    const auto it = columns.find(name);
    if (it == columns.end()) throw std::runtime_error("column '" + name + "' not found");
    return it->second;
  }
};

ColumnFile read_columns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ColumnFile file;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) file.names.push_back(tok);
    break;
  }
  for (const auto& name : file.names) file.columns[name] = {};
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    std::size_t c = 0;
    while (std::getline(ss, tok, ',')) {
      if (c >= file.names.size()) throw std::runtime_error("ragged row in " + path);
      file.columns[file.names[c]].push_back(std::stod(tok));
      ++c;
    }
    if (c != file.names.size()) throw std::runtime_error("ragged row in " + path);
  }
  return file;
}

PanelData subset_units(const PanelData& panel, const std::vector<int>& units) {
  PanelData sub;
  sub.time_ids = panel.time_ids;
  sub.outcomes.resize(static_cast<int>(units.size()), panel.n_times());
  sub.covariates.assign(panel.covariates.size(),
                        Eigen::MatrixXd(static_cast<int>(units.size()), panel.n_times()));
  for (std::size_t j = 0; j < units.size(); ++j) {
    const int i = units[j];
    sub.unit_ids.push_back(panel.unit_ids[i]);
    sub.outcomes.row(static_cast<int>(j)) = panel.outcomes.row(i);
    sub.treatment_start.push_back(panel.treatment_start[i]);
    for (std::size_t k = 0; k < panel.covariates.size(); ++k)
      sub.covariates[k].row(static_cast<int>(j)) = panel.covariates[k].row(i);
    if (!panel.unit_groups.empty()) sub.unit_groups.push_back(panel.unit_groups[i]);
  }
  return sub;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateParams {
  std::string design = "panel";
  int n = 30, t = 100, k = 2;
  double gamma = 0.0, tau = 1.0, beta_u = 0.0;
  double treated_fraction = 1.0;
  int start_lo = 40, start_hi = 95;
  std::string tau_kind = "constant";
  double tau_base = 0.5, tau_slope = 0.1;
};

json to_json(const SimulateParams& p) {
  return json{{"design", p.design},
              {"n", p.n},
              {"t", p.t},
              {"k", p.k},
              {"gamma", p.gamma},
              {"tau", p.tau},
              {"beta_u", p.beta_u},
              {"treated_fraction", p.treated_fraction},
              {"start_lo", p.start_lo},
              {"start_hi", p.start_hi},
              {"tau_kind", p.tau_kind},
              {"tau_base", p.tau_base},
              {"tau_slope", p.tau_slope}};
}

void from_json_params(const json& j, SimulateParams& p) {
  j.at("design").get_to(p.design);
  j.at("n").get_to(p.n);
  j.at("t").get_to(p.t);
  j.at("k").get_to(p.k);
  j.at("gamma").get_to(p.gamma);
  j.at("tau").get_to(p.tau);
  j.at("beta_u").get_to(p.beta_u);
  j.at("treated_fraction").get_to(p.treated_fraction);
  j.at("start_lo").get_to(p.start_lo);
  j.at("start_hi").get_to(p.start_hi);
  j.at("tau_kind").get_to(p.tau_kind);
  j.at("tau_base").get_to(p.tau_base);
  j.at("tau_slope").get_to(p.tau_slope);
}

int run_simulate(const SimulateParams& p, std::uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const json params = to_json(p);
  const std::string digest = digest_of("simulate", seed, params);

  if (p.design == "cross-section") {
    const auto sim = simgen::simulate_cross_section(p.n, p.gamma, p.tau, seed);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < p.n; ++i)
      rows.push_back({std::to_string(i + 1), fmt(sim.y[i]), fmt(sim.d[i]), fmt(sim.x1[i]),
                      fmt(sim.x2[i]), fmt(sim.x3[i])});
    io::write_table(fs::path(out_dir) / "data.csv", digest, {"unit", "y", "d", "x1", "x2", "x3"},
                    rows);
    io::write_table(fs::path(out_dir) / "truth.csv", digest, {"tau_true", "gamma"},
                    {{fmt(sim.tau_true), fmt(sim.gamma)}});
  } else if (p.design == "panel") {
    simgen::PanelSimConfig config;
    config.n_units = p.n;
    config.n_times = p.t;
    config.n_factors = p.k;
    config.beta_u = p.beta_u;
    config.treated_fraction = p.treated_fraction;
    config.start_lo = p.start_lo;
    config.start_hi = p.start_hi;
    config.tau_spec.kind = p.tau_kind == "ramp" ? simgen::TauSpec::Kind::ramp
                                                : simgen::TauSpec::Kind::constant;
    config.tau_spec.value = p.tau;
    config.tau_spec.base = p.tau_base;
    config.tau_spec.slope = p.tau_slope;
    const auto sim = simgen::simulate_panel(config, seed);
    io::write_panel(fs::path(out_dir) / "panel.csv", sim.panel, {}, digest);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < sim.panel.n_units(); ++i)
      for (int t = 0; t < sim.panel.n_times(); ++t)
        rows.push_back({sim.panel.unit_ids[i], sim.panel.time_ids[t], fmt(sim.true_tau(i, t))});
    io::write_table(fs::path(out_dir) / "truth.csv", digest, {"unit", "time", "tau_true"}, rows);
  } else {
    throw std::runtime_error("unknown design '" + p.design + "'");
  }
  write_config(out_dir, "simulate", seed, params, json{{"out_dir", out_dir}}, digest);
  std::cout << "simulate: wrote " << out_dir << " (digest " << digest << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// shared chain parameter block for panel commands
// ---------------------------------------------------------------------------

struct ChainParams {
  int iterations = 4000;
  int burnin = 1500;
  double loading_scale = 1.0;
  double prior_a = 0.01;
  double prior_b = 0.01;
  double beta_prior_scale = 100.0;
  bool shared_variance = false;
};

void add_chain_json(json& j, const ChainParams& c) {
  j["iterations"] = c.iterations;
  j["burnin"] = c.burnin;
  j["loading_scale"] = c.loading_scale;
  j["prior_a"] = c.prior_a;
  j["prior_b"] = c.prior_b;
  j["beta_prior_scale"] = c.beta_prior_scale;
  j["shared_variance"] = c.shared_variance;
}

void chain_from_json(const json& j, ChainParams& c) {
  j.at("iterations").get_to(c.iterations);
  j.at("burnin").get_to(c.burnin);
  j.at("loading_scale").get_to(c.loading_scale);
  j.at("prior_a").get_to(c.prior_a);
  j.at("prior_b").get_to(c.prior_b);
  j.at("beta_prior_scale").get_to(c.beta_prior_scale);
  j.at("shared_variance").get_to(c.shared_variance);
}

factor_model::FactorPriors priors_of(const ChainParams& c, int n_covariates) {
  factor_model::FactorPriors priors;
  priors.loading_scale = c.loading_scale;
  priors.a = c.prior_a;
  priors.b = c.prior_b;
  if (n_covariates > 0)
    priors.beta_cov = c.beta_prior_scale *
                      Eigen::MatrixXd::Identity(n_covariates, n_covariates);
  return priors;
}

factor_model::FactorOptions chain_of(const ChainParams& c) {
  factor_model::FactorOptions opt;
  opt.iterations = c.iterations;
  opt.burnin = c.burnin;
  opt.variance =
      c.shared_variance ? factor_model::VarianceMode::shared : factor_model::VarianceMode::per_unit;
  return opt;
}

void add_chain_options(CLI::App* cmd, ChainParams& c) {
  cmd->add_option("--iterations", c.iterations, "Gibbs iterations");
  cmd->add_option("--burnin", c.burnin, "burn-in iterations");
  cmd->add_option("--loading-scale", c.loading_scale, "loading prior variance");
  cmd->add_option("--prior-a", c.prior_a, "precision prior shape");
  cmd->add_option("--prior-b", c.prior_b, "precision prior rate");
  cmd->add_option("--beta-prior-scale", c.beta_prior_scale, "covariate coefficient prior variance");
  cmd->add_flag("--shared-variance", c.shared_variance, "single noise scale across units");
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

struct SelectParams {
  std::string omega_grid = "0.1:0.1:3.0";
  std::string k_set = "1,2,3";
  double tune_fraction = 0.20;
  double pseudo_fraction = 0.15;
  bool tune_include_pretreatment = false;
  int chain_replicates = 1;
  double alpha = 0.05;
  int start_lo = -1;  // -1: panel-relative default
  int start_hi = -1;
  ChainParams chain;
  // Cross-section truth mode.
  int replicates = 10;
  std::string outcome = "y", treatment = "d", covariates = "x1";
  bool intercept = false;
  double prior_scale = 100.0;
  double fixed_sigma2 = -1.0;  // <= 0: sample sigma2
};

json to_json(const SelectParams& p) {
  json j{{"omega_grid", p.omega_grid},
         {"k_set", p.k_set},
         {"tune_fraction", p.tune_fraction},
         {"pseudo_fraction", p.pseudo_fraction},
         {"tune_include_pretreatment", p.tune_include_pretreatment},
         {"chain_replicates", p.chain_replicates},
         {"alpha", p.alpha},
         {"start_lo", p.start_lo},
         {"start_hi", p.start_hi},
         {"replicates", p.replicates},
         {"outcome", p.outcome},
         {"treatment", p.treatment},
         {"covariates", p.covariates},
         {"intercept", p.intercept},
         {"prior_scale", p.prior_scale},
         {"fixed_sigma2", p.fixed_sigma2}};
  add_chain_json(j, p.chain);
  return j;
}

void from_json_params(const json& j, SelectParams& p) {
  j.at("omega_grid").get_to(p.omega_grid);
  j.at("k_set").get_to(p.k_set);
  j.at("tune_fraction").get_to(p.tune_fraction);
  j.at("pseudo_fraction").get_to(p.pseudo_fraction);
  j.at("tune_include_pretreatment").get_to(p.tune_include_pretreatment);
  j.at("chain_replicates").get_to(p.chain_replicates);
  j.at("alpha").get_to(p.alpha);
  j.at("start_lo").get_to(p.start_lo);
  j.at("start_hi").get_to(p.start_hi);
  j.at("replicates").get_to(p.replicates);
  j.at("outcome").get_to(p.outcome);
  j.at("treatment").get_to(p.treatment);
  j.at("covariates").get_to(p.covariates);
  j.at("intercept").get_to(p.intercept);
  j.at("prior_scale").get_to(p.prior_scale);
  j.at("fixed_sigma2").get_to(p.fixed_sigma2);
  chain_from_json(j, p.chain);
}

void write_surface(const fs::path& path, const std::string& digest,
                   const selection::SelectionResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : selection::score_surface_export(result))
    rows.push_back({r.k ? std::to_string(*r.k) : "", fmt(r.omega), fmt(r.squared_bias),
                    fmt(r.interval_score), fmt(r.combined), std::to_string(r.n_ok)});
  io::write_table(path, digest, {"k", "omega", "bias2", "interval_score", "combined", "n_ok"},
                  rows);
}

void write_selection_json(const fs::path& path, const selection::SelectionResult& result,
                          const PanelData* panel, const std::string& digest) {
  json j;
  j["best_omega"] = result.best_omega;
  if (result.best_k) j["best_k"] = *result.best_k;
  j["seed"] = result.seed;
  j["digest"] = digest;
  if (panel) {
    json pseudo = json::array();
    for (int u : result.pseudo_units) {
      json rec;
      rec["unit"] = panel->unit_ids[u];
      rec["placebo_start"] = panel->time_ids[*result.placebo_starts[u]];
      pseudo.push_back(rec);
    }
    j["pseudo_treated"] = pseudo;
    j["eval_cells"] = result.eval_cells.size();
    j["tune_cells"] = result.tune_mask.size();
    j["eval_bias2"] = result.eval_overall.squared_bias;
    j["eval_interval_score"] = result.eval_overall.interval_score;
    j["eval_combined"] = result.eval_overall.combined;
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

int run_select(const SelectParams& p, std::uint64_t seed, const std::string& panel_path,
               const std::string& data_path, const std::string& truth_path,
               const std::string& out_dir) {
  fs::create_directories(out_dir);
  const json params = to_json(p);
  const std::string digest = digest_of("select", seed, params);
  json io_section{{"out_dir", out_dir}};

  if (!data_path.empty()) {
    // Cross-section truth mode: Algorithm-1 grid search with replicate chains.
    io_section["data"] = data_path;
    io_section["truth"] = truth_path;
    const ColumnFile data = read_columns(data_path);
    const ColumnFile truth = read_columns(truth_path);
    const double tau_true = truth.at("tau_true").at(0);

    const auto& y_col = data.at(p.outcome);
    const int n = static_cast<int>(y_col.size());
    std::vector<std::string> cov_names = parse_string_list(p.covariates);
    const int q = 1 + static_cast<int>(cov_names.size()) + (p.intercept ? 1 : 0);
    Eigen::MatrixXd design(n, q);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      int c = 0;
      if (p.intercept) design(i, c++) = 1.0;
      design(i, c++) = data.at(p.treatment)[i];
      for (const auto& name : cov_names) design(i, c++) = data.at(name)[i];
      y[i] = y_col[i];
    }
    const int tau_index = p.intercept ? 1 : 0;
    auto priors = regression::RegressionPriors::weakly_informative(q, p.prior_scale);
    regression::RegressionOptions chain;
    chain.iterations = p.chain.iterations;
    chain.burnin = p.chain.burnin;
    if (p.fixed_sigma2 > 0.0) chain.fixed_sigma2 = p.fixed_sigma2;

    const auto factory = [&](double omega, int, std::uint64_t fit_seed) {
      selection::GridFit fit;
      const auto reg = regression::gibbs_regression(design, y, priors, omega, chain, fit_seed);
      fit.summary = regression::tau_summary(reg, tau_index, p.alpha);
      fit.ok = true;
      return fit;
    };
    const auto grid = parse_omega_grid(p.omega_grid);
    const auto result = selection::select_omega(
        factory, [&](int) { return tau_true; }, grid, p.replicates, p.alpha, seed);
    write_surface(fs::path(out_dir) / "surface.csv", digest, result);
    write_selection_json(fs::path(out_dir) / "selection.json", result, nullptr, digest);
    write_config(out_dir, "select", seed, params, io_section, digest);
    std::cout << "select: omega*=" << result.best_omega << " (seed " << seed << ")\n";
    return 0;
  }

  io_section["panel"] = panel_path;
  const auto file = io::read_panel(panel_path);
  selection::PlaceboOptions opt;
  opt.k_set = parse_int_list(p.k_set);
  opt.tune_fraction = p.tune_fraction;
  opt.pseudo_fraction = p.pseudo_fraction;
  opt.tune_include_pretreatment = p.tune_include_pretreatment;
  opt.chain_replicates = p.chain_replicates;
  opt.alpha = p.alpha;
  if (p.start_lo >= 0) opt.start_lo = p.start_lo;
  if (p.start_hi >= 0) opt.start_hi = p.start_hi;
  opt.priors = priors_of(p.chain, file.panel.n_covariates());
  opt.chain = chain_of(p.chain);
  const auto grid = parse_omega_grid(p.omega_grid);
  const auto result = selection::placebo_pipeline(file.panel, grid, opt, seed);

  write_surface(fs::path(out_dir) / "surface.csv", digest, result);
  write_selection_json(fs::path(out_dir) / "selection.json", result, &file.panel, digest);
  {
    std::vector<std::vector<std::string>> rows;
    for (const Cell& c : result.eval_mask.cells())
      rows.push_back({"eval", file.panel.unit_ids[c.unit], file.panel.time_ids[c.time]});
    for (const Cell& c : result.tune_mask.cells())
      rows.push_back({"tune", file.panel.unit_ids[c.unit], file.panel.time_ids[c.time]});
    io::write_table(fs::path(out_dir) / "masks.csv", digest, {"mask", "unit", "time"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [t, score] : result.eval_per_time)
      rows.push_back({file.panel.time_ids[t], "rbci", fmt(score.squared_bias),
                      fmt(score.interval_score)});
    io::write_table(fs::path(out_dir) / "eval_pertime.csv", digest,
                    {"period", "method", "bias2", "interval_score"}, rows);
  }
  write_config(out_dir, "select", seed, params, io_section, digest);
  std::cout << "select: K*=" << result.best_k.value_or(0) << " omega*=" << result.best_omega
            << " eval combined=" << result.eval_overall.combined << " (seed " << seed << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit-regression
// ---------------------------------------------------------------------------

struct FitRegressionParams {
  std::string outcome = "y", treatment = "d", covariates = "x1";
  bool intercept = false;
  double omega = 1.0;
  double alpha = 0.05;
  double prior_scale = 100.0;
  double fixed_sigma2 = -1.0;
  int iterations = 5000;
  int burnin = 2000;
};

json to_json(const FitRegressionParams& p) {
  return json{{"outcome", p.outcome},     {"treatment", p.treatment},
              {"covariates", p.covariates}, {"intercept", p.intercept},
              {"omega", p.omega},         {"alpha", p.alpha},
              {"prior_scale", p.prior_scale}, {"fixed_sigma2", p.fixed_sigma2},
              {"iterations", p.iterations}, {"burnin", p.burnin}};
}

void from_json_params(const json& j, FitRegressionParams& p) {
  j.at("outcome").get_to(p.outcome);
  j.at("treatment").get_to(p.treatment);
  j.at("covariates").get_to(p.covariates);
  j.at("intercept").get_to(p.intercept);
  j.at("omega").get_to(p.omega);
  j.at("alpha").get_to(p.alpha);
  j.at("prior_scale").get_to(p.prior_scale);
  j.at("fixed_sigma2").get_to(p.fixed_sigma2);
  j.at("iterations").get_to(p.iterations);
  j.at("burnin").get_to(p.burnin);
}

int run_fit_regression(const FitRegressionParams& p, std::uint64_t seed,
                       const std::string& data_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const json params = to_json(p);
  const std::string digest = digest_of("fit-regression", seed, params);

  const ColumnFile data = read_columns(data_path);
  const auto& y_col = data.at(p.outcome);
  const int n = static_cast<int>(y_col.size());
  std::vector<std::string> cov_names = parse_string_list(p.covariates);
  std::vector<std::string> coef_names;
  if (p.intercept) coef_names.push_back("(intercept)");
  coef_names.push_back(p.treatment);
  for (const auto& c : cov_names) coef_names.push_back(c);
  const int q = static_cast<int>(coef_names.size());

  Eigen::MatrixXd design(n, q);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    int c = 0;
    if (p.intercept) design(i, c++) = 1.0;
    design(i, c++) = data.at(p.treatment)[i];
    for (const auto& name : cov_names) design(i, c++) = data.at(name)[i];
    y[i] = y_col[i];
  }

  auto priors = regression::RegressionPriors::weakly_informative(q, p.prior_scale);
  regression::RegressionOptions chain;
  chain.iterations = p.iterations;
  chain.burnin = p.burnin;
  if (p.fixed_sigma2 > 0.0) chain.fixed_sigma2 = p.fixed_sigma2;
  const auto fit = regression::gibbs_regression(design, y, priors, p.omega, chain, seed);
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";

  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k < q; ++k) {
    const auto s = regression::tau_summary(fit, k, p.alpha);
    rows.push_back({coef_names[k], fmt(s.mean), fmt(s.lower), fmt(s.upper)});
  }
  const auto s2 = summarize(fit.sigma2_draws, p.alpha);
  rows.push_back({"sigma2", fmt(s2.mean), fmt(s2.lower), fmt(s2.upper)});
  io::write_table(fs::path(out_dir) / "fit.csv", digest, {"coefficient", "mean", "lower", "upper"},
                  rows);
  write_config(out_dir, "fit-regression", seed, params,
               json{{"data", data_path}, {"out_dir", out_dir}}, digest);
  std::cout << "fit-regression: tau mean=" << regression::tau_summary(fit, p.intercept ? 1 : 0, p.alpha).mean
            << " (seed " << seed << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit-panel
// ---------------------------------------------------------------------------

struct FitPanelParams {
  int k = 2;
  double omega = 1.0;
  double alpha = 0.05;
  bool event_time = false;
  ChainParams chain;
};

json to_json(const FitPanelParams& p) {
  json j{{"k", p.k}, {"omega", p.omega}, {"alpha", p.alpha}, {"event_time", p.event_time}};
  add_chain_json(j, p.chain);
  return j;
}

void from_json_params(const json& j, FitPanelParams& p) {
  j.at("k").get_to(p.k);
  j.at("omega").get_to(p.omega);
  j.at("alpha").get_to(p.alpha);
  j.at("event_time").get_to(p.event_time);
  chain_from_json(j, p.chain);
}

int run_fit_panel(const FitPanelParams& p, std::uint64_t seed, const std::string& panel_path,
                  const std::string& out_dir) {
  fs::create_directories(out_dir);
  const json params = to_json(p);
  const std::string digest = digest_of("fit-panel", seed, params);

  const auto file = io::read_panel(panel_path);
  const PanelData& panel = file.panel;
  std::vector<Cell> treated;
  for (int i = 0; i < panel.n_units(); ++i)
    for (int t = 0; t < panel.n_times(); ++t)
      if (panel.is_treated_cell(i, t) && panel.is_observed(i, t)) treated.push_back({i, t});
  if (treated.empty()) throw std::runtime_error("fit-panel: no observed treated cells");
  const CellMask treated_mask(std::move(treated), panel.n_units(), panel.n_times());

  const auto fit = factor_model::gibbs_factor(panel, treated_mask, p.k, p.omega,
                                              priors_of(p.chain, panel.n_covariates()),
                                              chain_of(p.chain), seed);
  const auto pred = factor_model::posterior_predict(fit, panel, treated_mask);
  const auto counterfactual = factor_model::cell_summaries(pred, p.alpha);
  const auto effects = causal::effect_draws(panel, pred, treated_mask);
  const auto indicator = build_treatment_indicator(panel);
  const auto curve = causal::att_curve(effects, indicator, p.alpha, p.event_time);

  std::vector<std::vector<std::string>> att_rows;
  for (const auto& pt : curve.per_period) {
    const std::string label = p.event_time ? std::to_string(pt.time) : panel.time_ids[pt.time];
    att_rows.push_back({label, std::to_string(pt.n_treated), fmt(pt.summary.mean),
                        fmt(pt.summary.lower), fmt(pt.summary.upper)});
  }
  att_rows.push_back({"overall", "", fmt(curve.overall.mean), fmt(curve.overall.lower),
                      fmt(curve.overall.upper)});
  io::write_table(fs::path(out_dir) / "att.csv", digest,
                  {"period", "n_treated", "mean", "lower", "upper"}, att_rows);

  std::vector<std::vector<std::string>> cell_rows;
  for (std::size_t c = 0; c < pred.cells.size(); ++c) {
    const Cell cell = pred.cells[c];
    DrawStore store{"tau", {effects.draws.col(static_cast<int>(c)).data(),
                            effects.draws.col(static_cast<int>(c)).data() + effects.draws.rows()}};
    const auto tau_sum = summarize(store, p.alpha);
    cell_rows.push_back({panel.unit_ids[cell.unit], panel.time_ids[cell.time],
                         fmt(panel.outcomes(cell.unit, cell.time)), fmt(counterfactual[c].mean),
                         fmt(counterfactual[c].lower), fmt(counterfactual[c].upper),
                         fmt(tau_sum.mean), fmt(tau_sum.lower), fmt(tau_sum.upper)});
  }
  io::write_table(fs::path(out_dir) / "cells.csv", digest,
                  {"unit", "time", "outcome", "y0_mean", "y0_lower", "y0_upper", "tau_mean",
                   "tau_lower", "tau_upper"},
                  cell_rows);
  write_config(out_dir, "fit-panel", seed, params,
               json{{"panel", panel_path}, {"out_dir", out_dir}}, digest);
  std::cout << "fit-panel: overall ATT=" << curve.overall.mean << " [" << curve.overall.lower
            << ", " << curve.overall.upper << "] (seed " << seed << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateParams {
  int k = 2;
  double omega = 1.0;
  double alpha = 0.05;
  double pseudo_fraction = 0.15;
  int start_lo = -1, start_hi = -1;
  std::string outcome_label;
  ChainParams chain;
};

json to_json(const EvaluateParams& p) {
  json j{{"k", p.k},
         {"omega", p.omega},
         {"alpha", p.alpha},
         {"pseudo_fraction", p.pseudo_fraction},
         {"start_lo", p.start_lo},
         {"start_hi", p.start_hi},
         {"outcome_label", p.outcome_label}};
  add_chain_json(j, p.chain);
  return j;
}

void from_json_params(const json& j, EvaluateParams& p) {
  j.at("k").get_to(p.k);
  j.at("omega").get_to(p.omega);
  j.at("alpha").get_to(p.alpha);
  j.at("pseudo_fraction").get_to(p.pseudo_fraction);
  j.at("start_lo").get_to(p.start_lo);
  j.at("start_hi").get_to(p.start_hi);
  j.at("outcome_label").get_to(p.outcome_label);
  chain_from_json(j, p.chain);
}

int run_evaluate(EvaluateParams p, std::uint64_t seed, const std::string& panel_path,
                 const std::string& selection_dir, const std::string& out_dir) {
  if (!selection_dir.empty()) {
    // Adopt the winning configuration and the placebo design of a finished
    // selection run; digests are verified before anything is reused.
    const json cfg = load_checked_config((fs::path(selection_dir) / "config.json").string(),
                                         "select");
    const json sel = load_json((fs::path(selection_dir) / "selection.json").string());
    if (sel.at("digest") != cfg.at("digest"))
      throw std::runtime_error("selection.json digest does not match config.json");
    p.k = sel.at("best_k").get<int>();
    p.omega = sel.at("best_omega").get<double>();
    seed = cfg.at("seed").get<std::uint64_t>();
    p.pseudo_fraction = cfg.at("params").at("pseudo_fraction").get<double>();
    p.start_lo = cfg.at("params").at("start_lo").get<int>();
    p.start_hi = cfg.at("params").at("start_hi").get<int>();
  }
  fs::create_directories(out_dir);
  const json params = to_json(p);
  const std::string digest = digest_of("evaluate", seed, params);

  const auto file = io::read_panel(panel_path);
  selection::PlaceboOptions opt;
  opt.k_set = {p.k};
  opt.pseudo_fraction = p.pseudo_fraction;
  opt.alpha = p.alpha;
  if (p.start_lo >= 0) opt.start_lo = p.start_lo;
  if (p.start_hi >= 0) opt.start_hi = p.start_hi;
  opt.priors = priors_of(p.chain, file.panel.n_covariates());
  opt.chain = chain_of(p.chain);
  selection::OmegaGrid grid;
  grid.values = {p.omega};
  const auto result = selection::placebo_pipeline(file.panel, grid, opt, seed);

  std::vector<std::vector<std::string>> pertime;
  for (const auto& [t, score] : result.eval_per_time)
    pertime.push_back({file.panel.time_ids[t], "rbci", fmt(score.squared_bias),
                       fmt(score.interval_score)});
  io::write_table(fs::path(out_dir) / "pertime.csv", digest,
                  {"period", "method", "bias2", "interval_score"}, pertime);

  const std::string label =
      p.outcome_label.empty() ? fs::path(panel_path).stem().string() : p.outcome_label;
  io::write_table(fs::path(out_dir) / "summary.csv", digest,
                  {"outcome", "method", "bias2", "interval_score", "k", "omega"},
                  {{label, "rbci", fmt(result.eval_overall.squared_bias),
                    fmt(result.eval_overall.interval_score), std::to_string(p.k), fmt(p.omega)}});
  json io_section{{"panel", panel_path}, {"out_dir", out_dir}};
  if (!selection_dir.empty()) io_section["selection"] = selection_dir;
  write_config(out_dir, "evaluate", seed, params, io_section, digest);
  std::cout << "evaluate: bias2=" << result.eval_overall.squared_bias
            << " interval_score=" << result.eval_overall.interval_score << " (seed " << seed
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareParams {
  std::string omega_grid = "0.1:0.1:3.0";
  std::string k_set = "1,2,3";
  double tune_fraction = 0.20;
  double pseudo_fraction = 0.15;
  bool tune_include_pretreatment = false;
  int chain_replicates = 1;
  double alpha = 0.05;
  int start_lo = -1, start_hi = -1;
  int bootstrap = 200;
  double ridge = 1e-3;
  bool by_group = false;
  ChainParams chain;
};

json to_json(const CompareParams& p) {
  json j{{"omega_grid", p.omega_grid},
         {"k_set", p.k_set},
         {"tune_fraction", p.tune_fraction},
         {"pseudo_fraction", p.pseudo_fraction},
         {"tune_include_pretreatment", p.tune_include_pretreatment},
         {"chain_replicates", p.chain_replicates},
         {"alpha", p.alpha},
         {"start_lo", p.start_lo},
         {"start_hi", p.start_hi},
         {"bootstrap", p.bootstrap},
         {"ridge", p.ridge},
         {"by_group", p.by_group}};
  add_chain_json(j, p.chain);
  return j;
}

void from_json_params(const json& j, CompareParams& p) {
  j.at("omega_grid").get_to(p.omega_grid);
  j.at("k_set").get_to(p.k_set);
  j.at("tune_fraction").get_to(p.tune_fraction);
  j.at("pseudo_fraction").get_to(p.pseudo_fraction);
  j.at("tune_include_pretreatment").get_to(p.tune_include_pretreatment);
  j.at("chain_replicates").get_to(p.chain_replicates);
  j.at("alpha").get_to(p.alpha);
  j.at("start_lo").get_to(p.start_lo);
  j.at("start_hi").get_to(p.start_hi);
  j.at("bootstrap").get_to(p.bootstrap);
  j.at("ridge").get_to(p.ridge);
  j.at("by_group").get_to(p.by_group);
  chain_from_json(j, p.chain);
}

struct CompareRow {
  std::string group;
  int n_units = 0;
  std::size_t n_cells = 0;
  int k = 0;
  double omega = 1.0;
  scoring::ScoreReport rbci, mc;
};

/// One head-to-head run on a panel: RBCI placebo pipeline, then the ALS
/// baseline fit on the same unmasked data with wild-bootstrap intervals on
/// exactly the same evaluation cells.
CompareRow compare_on_panel(const PanelData& panel, const CompareParams& p,
                            const std::string& group, std::uint64_t seed,
                            std::map<int, scoring::ScoreReport>* rbci_per_time_out,
                            std::map<int, scoring::ScoreReport>* mc_per_time_out) {
  selection::PlaceboOptions opt;
  opt.k_set = parse_int_list(p.k_set);
  opt.tune_fraction = p.tune_fraction;
  opt.pseudo_fraction = p.pseudo_fraction;
  opt.tune_include_pretreatment = p.tune_include_pretreatment;
  opt.chain_replicates = p.chain_replicates;
  opt.alpha = p.alpha;
  if (p.start_lo >= 0) opt.start_lo = p.start_lo;
  if (p.start_hi >= 0) opt.start_hi = p.start_hi;
  opt.priors = priors_of(p.chain, panel.n_covariates());
  opt.chain = chain_of(p.chain);
  const auto grid = parse_omega_grid(p.omega_grid);
  const auto rbci_result = selection::placebo_pipeline(panel, grid, opt, seed);

  // The baseline consumes the identical masked design: treated cells and the
  // evaluation mask are missing, everything else is visible.
  std::vector<Cell> treated;
  for (int i = 0; i < panel.n_units(); ++i)
    for (int t = 0; t < panel.n_times(); ++t)
      if (panel.is_treated_cell(i, t) && panel.is_observed(i, t)) treated.push_back({i, t});
  const CellMask treated_mask(std::move(treated), panel.n_units(), panel.n_times());
  const CellMask mc_missing = treated_mask.unioned(rbci_result.eval_mask);

  mc_baseline::AlsOptions als;
  als.ridge = p.ridge;
  const auto mc_fit = mc_baseline::als_complete(panel, mc_missing, *rbci_result.best_k, als,
                                                rng::derive(seed, "compare/mc"));
  mc_baseline::BootstrapOptions boot;
  boot.replicates = p.bootstrap;
  boot.als = als;
  const auto intervals = mc_baseline::wild_bootstrap(panel, mc_fit, rbci_result.eval_mask,
                                                     treated_mask, boot,
                                                     rng::derive(seed, "compare/bootstrap"));
  const auto mc_scores =
      mc_baseline::mc_evaluate(mc_fit, intervals, rbci_result.eval_truth, p.alpha);

  CompareRow row;
  row.group = group;
  row.n_units = panel.n_units();
  row.n_cells = rbci_result.eval_cells.size();
  row.k = *rbci_result.best_k;
  row.omega = rbci_result.best_omega;
  row.rbci = rbci_result.eval_overall;
  std::vector<scoring::ScoreReport> mc_reports;
  mc_reports.reserve(mc_scores.size());
  for (const auto& cs : mc_scores) mc_reports.push_back(cs.score);
  row.mc = scoring::average_score(mc_reports);

  if (rbci_per_time_out) *rbci_per_time_out = rbci_result.eval_per_time;
  if (mc_per_time_out) {
    std::vector<PosteriorSummary> summaries;
    summaries.reserve(mc_scores.size());
    for (const auto& cs : mc_scores) summaries.push_back(cs.summary);
    *mc_per_time_out = causal::per_time_evaluation(rbci_result.eval_cells, summaries,
                                                   rbci_result.eval_truth, p.alpha);
  }
  return row;
}

int run_compare(const CompareParams& p, std::uint64_t seed, const std::string& panel_path,
                const std::string& out_dir) {
  fs::create_directories(out_dir);
  const json params = to_json(p);
  const std::string digest = digest_of("compare", seed, params);

  const auto file = io::read_panel(panel_path);
  const PanelData& panel = file.panel;

  std::vector<std::pair<std::string, PanelData>> runs;
  if (p.by_group) {
    if (panel.unit_groups.empty())
      throw std::runtime_error("compare: --by-group requires a group column");
    std::map<std::string, std::vector<int>> members;
    for (int i = 0; i < panel.n_units(); ++i) members[panel.unit_groups[i]].push_back(i);
    for (const auto& [g, units] : members) runs.emplace_back(g, subset_units(panel, units));
  }

  std::vector<CompareRow> rows;
  std::vector<std::vector<std::string>> pertime_rows;
  auto emit_pertime = [&](const std::string& group, const std::string& method,
                          const std::map<int, scoring::ScoreReport>& per_time) {
    for (const auto& [t, score] : per_time)
      pertime_rows.push_back({group, panel.time_ids[t], method, fmt(score.squared_bias),
                              fmt(score.interval_score)});
  };

  for (std::size_t g = 0; g < runs.size(); ++g) {
    std::map<int, scoring::ScoreReport> rbci_pertime, mc_pertime;
    const auto row =
        compare_on_panel(runs[g].second, p, runs[g].first,
                         rng::derive(seed, "compare/group", {g}), &rbci_pertime, &mc_pertime);
    rows.push_back(row);
    emit_pertime(runs[g].first, "rbci", rbci_pertime);
    emit_pertime(runs[g].first, "mc", mc_pertime);
  }
  // Overall row across all units.
  {
    std::map<int, scoring::ScoreReport> rbci_pertime, mc_pertime;
    const auto row = compare_on_panel(panel, p, "(all)", seed, &rbci_pertime, &mc_pertime);
    rows.push_back(row);
    emit_pertime("(all)", "rbci", rbci_pertime);
    emit_pertime("(all)", "mc", mc_pertime);
  }

  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows)
    table.push_back({r.group, std::to_string(r.n_units), std::to_string(r.n_cells),
                     std::to_string(r.k), fmt(r.omega), fmt(r.rbci.squared_bias),
                     fmt(r.rbci.interval_score), fmt(r.rbci.combined), fmt(r.mc.squared_bias),
                     fmt(r.mc.interval_score), fmt(r.mc.combined)});
  io::write_table(fs::path(out_dir) / "compare.csv", digest,
                  {"group", "n_units", "n_cells", "k", "omega", "rbci_bias2", "rbci_is",
                   "rbci_combined", "mc_bias2", "mc_is", "mc_combined"},
                  table);
  io::write_table(fs::path(out_dir) / "pertime.csv", digest,
                  {"group", "period", "method", "bias2", "interval_score"}, pertime_rows);
  write_config(out_dir, "compare", seed, params,
               json{{"panel", panel_path}, {"out_dir", out_dir}}, digest);
  const auto& overall = rows.back();
  std::cout << "compare: rbci combined=" << overall.rbci.combined
            << " mc combined=" << overall.mc.combined << " at (K=" << overall.k
            << ", omega=" << overall.omega << ")\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"robust Bayesian causal inference toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 20240527;
  int threads = 0;
  std::string out_dir = "out";
  std::string config_path, panel_path, data_path, truth_path, selection_dir;

  const auto config = preparse_config(args);
  json config_json;
  if (config) {
    config_json = load_json(*config);
    if (config_json.contains("seed")) seed = config_json["seed"].get<std::uint64_t>();
    if (config_json.contains("io") && config_json["io"].contains("out_dir"))
      out_dir = config_json["io"]["out_dir"].get<std::string>();
  }
  auto config_params = [&](const char* command) -> const json* {
    if (!config || config_json.at("command") != command) return nullptr;
    return &config_json.at("params");
  };
  auto config_io = [&](const char* key) -> std::string {
    if (config && config_json.contains("io") && config_json["io"].contains(key))
      return config_json["io"][key].get<std::string>();
    return "";
  };

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--threads", threads, "worker pool size (0 = all cores)");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--config", config_path, "resolved config file to rerun from");
  };

  SimulateParams sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "generate simulation data");
  if (const json* j = config_params("simulate"); j) from_json_params(*j, sim);
  add_common(c_sim);
  c_sim->add_option("--design", sim.design, "cross-section | panel");
  c_sim->add_option("--n", sim.n, "units / observations");
  c_sim->add_option("--t", sim.t, "time periods (panel)");
  c_sim->add_option("--k", sim.k, "latent factors (panel)");
  c_sim->add_option("--gamma", sim.gamma, "confounding strength (cross-section)");
  c_sim->add_option("--tau", sim.tau, "treatment effect");
  c_sim->add_option("--beta-u", sim.beta_u, "confounding strength (panel)");
  c_sim->add_option("--treated-fraction", sim.treated_fraction, "share of treated units");
  c_sim->add_option("--start-lo", sim.start_lo, "earliest treatment start");
  c_sim->add_option("--start-hi", sim.start_hi, "latest treatment start");
  c_sim->add_option("--tau-kind", sim.tau_kind, "constant | ramp");
  c_sim->add_option("--tau-base", sim.tau_base, "ramp base effect");
  c_sim->add_option("--tau-slope", sim.tau_slope, "ramp slope per exposure period");

  SelectParams sel;
  CLI::App* c_sel = app.add_subcommand("select", "grid-search K and omega");
  if (const json* j = config_params("select"); j) from_json_params(*j, sel);
  add_common(c_sel);
  c_sel->add_option("--panel", panel_path, "panel csv (placebo mode)");
  c_sel->add_option("--data", data_path, "cross-section csv (truth mode)");
  c_sel->add_option("--truth", truth_path, "truth csv (truth mode)");
  c_sel->add_option("--omega-grid", sel.omega_grid, "lo:step:hi or comma list");
  c_sel->add_option("--k-set", sel.k_set, "comma list of factor counts");
  c_sel->add_option("--tune-fraction", sel.tune_fraction, "tuning mask fraction");
  c_sel->add_option("--pseudo-fraction", sel.pseudo_fraction, "pseudo-treated unit fraction");
  c_sel->add_flag("--tune-include-pretreatment", sel.tune_include_pretreatment,
                  "let the tuning mask cover pre-treatment cells of treated units");
  c_sel->add_option("--chain-replicates", sel.chain_replicates,
                    "independent chains averaged per grid point");
  c_sel->add_option("--alpha", sel.alpha, "interval level");
  c_sel->add_option("--start-lo", sel.start_lo, "placebo start low (index)");
  c_sel->add_option("--start-hi", sel.start_hi, "placebo start high (index)");
  c_sel->add_option("--replicates", sel.replicates, "chains per omega (truth mode)");
  c_sel->add_option("--outcome", sel.outcome, "outcome column (truth mode)");
  c_sel->add_option("--treatment", sel.treatment, "treatment column (truth mode)");
  c_sel->add_option("--covariates", sel.covariates, "covariate columns (truth mode)");
  c_sel->add_flag("--intercept", sel.intercept, "include an intercept (truth mode)");
  c_sel->add_option("--prior-scale", sel.prior_scale, "coefficient prior variance (truth mode)");
  c_sel->add_option("--fixed-sigma2", sel.fixed_sigma2, "fix sigma2 (truth mode, <=0 samples)");
  add_chain_options(c_sel, sel.chain);

  FitRegressionParams freg;
  CLI::App* c_freg = app.add_subcommand("fit-regression", "tempered Gaussian regression");
  if (const json* j = config_params("fit-regression"); j) from_json_params(*j, freg);
  add_common(c_freg);
  c_freg->add_option("--data", data_path, "column csv");
  c_freg->add_option("--outcome", freg.outcome, "outcome column");
  c_freg->add_option("--treatment", freg.treatment, "treatment column");
  c_freg->add_option("--covariates", freg.covariates, "comma list of covariate columns");
  c_freg->add_flag("--intercept", freg.intercept, "include an intercept");
  c_freg->add_option("--omega", freg.omega, "learning rate");
  c_freg->add_option("--alpha", freg.alpha, "interval level");
  c_freg->add_option("--prior-scale", freg.prior_scale, "coefficient prior variance");
  c_freg->add_option("--fixed-sigma2", freg.fixed_sigma2, "fix sigma2 (<=0 samples it)");
  c_freg->add_option("--iterations", freg.iterations, "Gibbs iterations");
  c_freg->add_option("--burnin", freg.burnin, "burn-in iterations");

  FitPanelParams fpan;
  CLI::App* c_fpan = app.add_subcommand("fit-panel", "factor model + ATT curves");
  if (const json* j = config_params("fit-panel"); j) from_json_params(*j, fpan);
  add_common(c_fpan);
  c_fpan->add_option("--panel", panel_path, "panel csv");
  c_fpan->add_option("--k", fpan.k, "factor count");
  c_fpan->add_option("--omega", fpan.omega, "learning rate");
  c_fpan->add_option("--alpha", fpan.alpha, "interval level");
  c_fpan->add_flag("--event-time", fpan.event_time, "align periods by exposure length");
  add_chain_options(c_fpan, fpan.chain);

  EvaluateParams ev;
  CLI::App* c_ev = app.add_subcommand("evaluate", "placebo evaluation at fixed (K, omega)");
  if (const json* j = config_params("evaluate"); j) from_json_params(*j, ev);
  add_common(c_ev);
  c_ev->add_option("--panel", panel_path, "panel csv");
  c_ev->add_option("--selection", selection_dir, "finished select run to adopt");
  c_ev->add_option("--k", ev.k, "factor count");
  c_ev->add_option("--omega", ev.omega, "learning rate");
  c_ev->add_option("--alpha", ev.alpha, "interval level");
  c_ev->add_option("--pseudo-fraction", ev.pseudo_fraction, "pseudo-treated unit fraction");
  c_ev->add_option("--start-lo", ev.start_lo, "placebo start low (index)");
  c_ev->add_option("--start-hi", ev.start_hi, "placebo start high (index)");
  c_ev->add_option("--outcome-label", ev.outcome_label, "label for the summary row");
  add_chain_options(c_ev, ev.chain);

  CompareParams cmp;
  CLI::App* c_cmp = app.add_subcommand("compare", "RBCI vs matrix completion head-to-head");
  if (const json* j = config_params("compare"); j) from_json_params(*j, cmp);
  add_common(c_cmp);
  c_cmp->add_option("--panel", panel_path, "panel csv");
  c_cmp->add_option("--omega-grid", cmp.omega_grid, "lo:step:hi or comma list");
  c_cmp->add_option("--k-set", cmp.k_set, "comma list of factor counts");
  c_cmp->add_option("--tune-fraction", cmp.tune_fraction, "tuning mask fraction");
  c_cmp->add_option("--pseudo-fraction", cmp.pseudo_fraction, "pseudo-treated unit fraction");
  c_cmp->add_flag("--tune-include-pretreatment", cmp.tune_include_pretreatment,
                  "let the tuning mask cover pre-treatment cells of treated units");
  c_cmp->add_option("--chain-replicates", cmp.chain_replicates,
                    "independent chains averaged per grid point");
  c_cmp->add_option("--alpha", cmp.alpha, "interval level");
  c_cmp->add_option("--start-lo", cmp.start_lo, "placebo start low (index)");
  c_cmp->add_option("--start-hi", cmp.start_hi, "placebo start high (index)");
  c_cmp->add_option("--b", cmp.bootstrap, "bootstrap replicates");
  c_cmp->add_option("--ridge", cmp.ridge, "ALS ridge");
  c_cmp->add_flag("--by-group", cmp.by_group, "one comparison per group plus overall");
  add_chain_options(c_cmp, cmp.chain);

  std::vector<std::string> argv = args;
  try {
    std::vector<const char*> cargv;
    cargv.push_back("rbci");
    for (const auto& a : argv) cargv.push_back(a.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  exec::set_threads(threads);
  try {
    if (config) {
      const std::string cfg_cmd = config_json.at("command").get<std::string>();
      const CLI::App* parsed = app.get_subcommands().empty() ? nullptr : app.get_subcommands()[0];
      if (parsed && parsed->get_name() != cfg_cmd)
        throw std::runtime_error("--config file belongs to command '" + cfg_cmd + "'");
    }
    if (c_sim->parsed()) return run_simulate(sim, seed, out_dir);
    if (c_sel->parsed()) {
      if (panel_path.empty()) panel_path = config_io("panel");
      if (data_path.empty()) data_path = config_io("data");
      if (truth_path.empty()) truth_path = config_io("truth");
      return run_select(sel, seed, panel_path, data_path, truth_path, out_dir);
    }
    if (c_freg->parsed()) {
      if (data_path.empty()) data_path = config_io("data");
      return run_fit_regression(freg, seed, data_path, out_dir);
    }
    if (c_fpan->parsed()) {
      if (panel_path.empty()) panel_path = config_io("panel");
      return run_fit_panel(fpan, seed, panel_path, out_dir);
    }
    if (c_ev->parsed()) {
      if (panel_path.empty()) panel_path = config_io("panel");
      if (selection_dir.empty()) selection_dir = config_io("selection");
      return run_evaluate(ev, seed, panel_path, selection_dir, out_dir);
    }
    if (c_cmp->parsed()) {
      if (panel_path.empty()) panel_path = config_io("panel");
      return run_compare(cmp, seed, panel_path, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}

}  // namespace rbci::cli
