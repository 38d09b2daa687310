#include <benchmark/benchmark.h>

#include "hedmet/demand.hpp"
#include "hedmet/estimator.hpp"
#include "hedmet/metrics.hpp"
#include "hedmet/panel.hpp"
#include "hedmet/synth.hpp"

using namespace hedmet;

namespace {

const CalibrationTable& calibration() {
  static const CalibrationTable c = panel::load_calibration("data/milk_profiles.csv");
  return c;
}

MarketPanel bench_panel(int weeks) {
  auto truth = synth::default_truth(calibration(), 1);
  truth.noise_sd = 0.002;
  return synth::gen_panel(truth, weeks, calibration());
}

}  // namespace

static void BM_GenPanel(benchmark::State& state) {
  auto truth = synth::default_truth(calibration(), 1);
  truth.noise_sd = 0.002;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        synth::gen_panel(truth, static_cast<int>(state.range(0)), calibration()));
}
BENCHMARK(BM_GenPanel)->Arg(209)->Arg(800);

static void BM_BuildRows(benchmark::State& state) {
  const auto panel = bench_panel(209);
  for (auto _ : state) benchmark::DoNotOptimize(estimator::build_rows(panel));
}
BENCHMARK(BM_BuildRows);

static void BM_BuildDistanceSet(benchmark::State& state) {
  const auto features = metrics::features_from_calibration(calibration());
  for (auto _ : state) benchmark::DoNotOptimize(metrics::build_distance_set(features));
}
BENCHMARK(BM_BuildDistanceSet);

static void BM_FitOriginal(benchmark::State& state) {
  const auto panel = bench_panel(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(demand::fit_original(panel, 0));
}
BENCHMARK(BM_FitOriginal)->Arg(209)->Arg(800);

static void BM_FitHm(benchmark::State& state) {
  const auto panel = bench_panel(209);
  const auto features = metrics::features_from_calibration(calibration());
  const auto set = metrics::build_distance_set(features);
  // fat-organic space stands in for a hedonic matrix of the same shape
  const auto& hed = set.get("FAT-ORGANIC");
  const auto nn = metrics::nearest_neighbor(hed);
  const auto chi = metrics::closeness_index(hed);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        demand::fit_hm(panel, hed, nn, features.share, chi, 0));
}
BENCHMARK(BM_FitHm);

static void BM_Aggregate(benchmark::State& state) {
  auto truth = synth::default_truth(calibration(), 2);
  const auto purchases =
      synth::gen_purchases(truth, static_cast<int>(state.range(0)), calibration());
  for (auto _ : state) benchmark::DoNotOptimize(panel::aggregate_weekly(purchases));
}
BENCHMARK(BM_Aggregate)->Arg(2000)->Arg(20000);

BENCHMARK_MAIN();
