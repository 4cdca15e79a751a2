// Benchmark comparing the serial reference kernels against their OpenMP
// counterparts, verifying bitwise agreement along the way.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <functional>

#include "rbci/exec.hpp"
#include "rbci/factor_model.hpp"
#include "rbci/mc_baseline.hpp"
#include "rbci/simgen.hpp"

using rbci::exec::Exec;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto start = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void report(const char* kernel, double serial_ms, double parallel_ms, bool match) {
  std::printf("%-18s %10.1f ms %10.1f ms   %5.2fx   %s\n", kernel, serial_ms, parallel_ms,
              serial_ms / parallel_ms, match ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel benchmark"};
  int units = 96, times = 192, factors = 3, iters = 150, boot = 32;
  std::uint64_t seed = 7;
  app.add_option("--units", units);
  app.add_option("--times", times);
  app.add_option("--factors", factors);
  app.add_option("--iters", iters);
  app.add_option("--bootstrap", boot);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  rbci::simgen::PanelSimConfig config;
  config.n_units = units;
  config.n_times = times;
  config.n_factors = factors;
  config.treated_fraction = 0.0;
  const auto sim = rbci::simgen::simulate_panel(config, seed);

  std::printf("panel %dx%d, K=%d, %d Gibbs iterations, %d bootstrap replicates, %d threads\n\n",
              units, times, factors, iters, boot, rbci::exec::max_threads());
  std::printf("%-18s %13s %13s %8s\n", "kernel", "serial", "openmp", "speedup");

  rbci::CellMask empty_mask;
  rbci::factor_model::FactorPriors priors;
  rbci::factor_model::FactorOptions opts;
  opts.iterations = iters;
  opts.burnin = iters / 2;

  rbci::factor_model::FactorFit fit_serial, fit_parallel;
  opts.mode = Exec::serial;
  const double gibbs_serial = time_ms([&] {
    fit_serial = rbci::factor_model::gibbs_factor(sim.panel, empty_mask, factors, 1.0, priors,
                                                  opts, seed);
  });
  opts.mode = Exec::openmp;
  const double gibbs_parallel = time_ms([&] {
    fit_parallel = rbci::factor_model::gibbs_factor(sim.panel, empty_mask, factors, 1.0, priors,
                                                    opts, seed);
  });
  bool gibbs_match = true;
  for (int m = 0; m < fit_serial.kept() && gibbs_match; ++m)
    gibbs_match = fit_serial.loading_draws[m] == fit_parallel.loading_draws[m] &&
                  fit_serial.factor_draws[m] == fit_parallel.factor_draws[m];
  report("gibbs sweep", gibbs_serial, gibbs_parallel, gibbs_match);

  // ALS completion with a 20% random mask.
  const auto mask = rbci::random_cell_mask(
      sim.panel, 0.2, [](int, int) { return true; }, seed);
  rbci::mc_baseline::AlsOptions als;
  als.max_iter = 80;
  rbci::mc_baseline::MCFit mc_serial, mc_parallel;
  als.mode = Exec::serial;
  const double als_serial =
      time_ms([&] { mc_serial = rbci::mc_baseline::als_complete(sim.panel, mask, factors, als, seed); });
  als.mode = Exec::openmp;
  const double als_parallel =
      time_ms([&] { mc_parallel = rbci::mc_baseline::als_complete(sim.panel, mask, factors, als, seed); });
  report("als completion", als_serial, als_parallel, mc_serial.completed == mc_parallel.completed);

  rbci::mc_baseline::BootstrapOptions bopt;
  bopt.replicates = boot;
  bopt.als = als;
  bopt.als.max_iter = 40;
  rbci::mc_baseline::BootstrapIntervals bi_serial, bi_parallel;
  bopt.als.mode = Exec::serial;
  const double boot_serial = time_ms([&] {
    bi_serial = rbci::mc_baseline::wild_bootstrap(sim.panel, mc_serial, mask, empty_mask, bopt, seed);
  });
  bopt.als.mode = Exec::openmp;
  const double boot_parallel = time_ms([&] {
    bi_parallel = rbci::mc_baseline::wild_bootstrap(sim.panel, mc_serial, mask, empty_mask, bopt, seed);
  });
  report("wild bootstrap", boot_serial, boot_parallel,
         bi_serial.lower == bi_parallel.lower && bi_serial.upper == bi_parallel.upper);

  const bool all_match = gibbs_match && mc_serial.completed == mc_parallel.completed &&
                         bi_serial.lower == bi_parallel.lower;
  return all_match ? 0 : 1;
}
