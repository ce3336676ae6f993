// Serial reference vs OpenMP kernel for each data-parallel loop.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "levnoise/config.hpp"
#include "levnoise/design_search.hpp"
#include "levnoise/noise_budget.hpp"
#include "levnoise/spectral.hpp"
#include "levnoise/trap_dynamics.hpp"

using namespace levnoise;

namespace {

std::vector<double> white_series(std::size_t n) {
  std::mt19937_64 engine(1);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  for (auto& v : x) v = normal(engine);
  return x;
}

ExperimentConfig desk_config() {
  auto c = reference_config();
  c.beam.power = 1e-6;
  c.vacuum.pressure_torr = 1e-2;
  c.detector.sampling_rate = 10240.0;
  return c;
}

template <bool Parallel>
void BM_Welch(benchmark::State& state) {
  const auto x = white_series(std::size_t{1} << 22);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto p = Parallel ? welch_psd(x, 1e6, n) : welch_psd_serial(x, 1e6, n);
    benchmark::DoNotOptimize(p.psd.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}

template <bool Parallel>
void BM_GridScan(benchmark::State& state) {
  const auto space = default_certificate_space();
  const auto base = reference_config();
  const auto grid = log_spaced(50.0, 1e4, 200);
  ScanSettings settings;
  settings.points_per_axis = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto r = Parallel ? grid_scan(space, base, grid, settings)
                      : grid_scan_serial(space, base, grid, settings);
    benchmark::DoNotOptimize(r.data());
  }
}

template <bool Parallel>
void BM_Ensemble(benchmark::State& state) {
  const auto c = desk_config();
  auto p = derive_sim_inputs(c, 5.0, 3).params;
  p.thermal_start = true;
  const auto members = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto e = Parallel ? ensemble_variance(c, p, members, {}, 0.0)
                      : ensemble_variance_serial(c, p, members, {}, 0.0);
    benchmark::DoNotOptimize(e.mean_variance);
  }
}

template <bool Parallel>
void BM_ColdDamping(benchmark::State& state) {
  auto c = desk_config();
  c.detector.geometric_factor = 2e5;
  c.detector.backaction_loss_factor = 1.0;
  c.feedback.force_limit = 1e-6;
  const auto p = derive_sim_inputs(c, 5.0, 3).params;
  const std::vector<double> gains = {0, 3, 10, 30, 100, 300, 1000, 3000};
  for (auto _ : state) {
    auto r = Parallel ? cold_damping_scan(c, p, gains) : cold_damping_scan_serial(c, p, gains);
    benchmark::DoNotOptimize(r.data());
  }
}

}  // namespace

BENCHMARK(BM_Welch<false>)->Name("welch/serial")->Arg(1024)->Arg(16384)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Welch<true>)->Name("welch/openmp")->Arg(1024)->Arg(16384)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridScan<false>)->Name("grid_scan/serial")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridScan<true>)->Name("grid_scan/openmp")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ensemble<false>)->Name("ensemble/serial")->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ensemble<true>)->Name("ensemble/openmp")->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ColdDamping<false>)->Name("cold_damping/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ColdDamping<true>)->Name("cold_damping/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
