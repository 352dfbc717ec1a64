#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "quietclock/fft.hpp"
#include "quietclock/model.hpp"
#include "quietclock/spectral.hpp"
#include "quietclock/stats.hpp"

using namespace quietclock;

static void BM_RealFft(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> x(m), power(m / 2 + 1);
  for (double& v : x) v = g(rng);
  RealFft fft(m);
  for (auto _ : state) {
    fft.power_spectrum(x, power);
    benchmark::DoNotOptimize(power.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RealFft)->RangeMultiplier(16)->Range(1 << 10, 1 << 22);

static void BM_ClockGenerator(benchmark::State& state) {
  ClockGenerator gen(ClockParams{}, 42);
  double sink = 0.0;
  for (auto _ : state) sink += gen.next().sample;
  benchmark::DoNotOptimize(sink);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ClockGenerator);

static void BM_LaserGenerator(benchmark::State& state) {
  LaserGenerator gen(LaserAnalogParams{});
  double sink = 0.0;
  for (auto _ : state) sink += gen.next().sample;
  benchmark::DoNotOptimize(sink);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LaserGenerator);

// Generation plus every streaming accumulator the runner uses, per period.
static void BM_StreamingPipeline(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  ClockGenerator gen(ClockParams{}, 7);
  PsdEstimator psd(m, Window::rectangular, ClockParams{}.delta);
  LedgerAccumulator ledger(gen.stored());
  FanoAccumulator fano(1000);
  EventStatsAccumulator events;
  for (auto _ : state) {
    const std::uint64_t k = gen.periods();
    const PeriodOutput out = gen.next();
    ledger.add(out);
    psd.push(out.sample);
    fano.add_period(out.events);
    if (out.events) events.add({k, out.mark});
  }
  benchmark::DoNotOptimize(psd.segments());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StreamingPipeline)->Arg(1 << 14)->Arg(1 << 20);

static void BM_BruteForceOracle(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const DissipationSeries s = gen_clock_series(ClockParams{}, 3, m);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_psd(s.samples, m).values.data());
}
BENCHMARK(BM_BruteForceOracle)->Arg(1 << 8)->Arg(1 << 10)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
