// Serial reference vs OpenMP kernels. Worker count via FEEDTYPE_BENCH_WORKERS
// (default: all cores).
#include <cstdlib>
#include <string>

#include <benchmark/benchmark.h>

#include "feedtype/isac.hpp"
#include "feedtype/strategy_tree.hpp"
#include "feedtype/typicality.hpp"

using namespace feedtype;

namespace {

const std::string kData = std::string(FEEDTYPE_SOURCE_DIR) + "/data/";

ExecPolicy policy() {
  const char* w = std::getenv("FEEDTYPE_BENCH_WORKERS");
  return ExecPolicy{w ? std::atoi(w) : 0};
}

const ScoreParams kScore(0, 1, 0.25, Dmc::bsc(0.3));

void BM_ExhaustiveSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::exhaustive_max_success(4, kScore).value);
}
void BM_ExhaustiveParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(exhaustive_max_success(4, kScore, policy()).value);
}

void BM_MonteCarloSerial(benchmark::State& st) {
  const auto s = make_threshold_strategy(1000, kScore);
  for (auto _ : st) benchmark::DoNotOptimize(serial::monte_carlo_deviation(*s, 1000, kScore, 2000, 1).hits);
}
void BM_MonteCarloParallel(benchmark::State& st) {
  const auto s = make_threshold_strategy(1000, kScore);
  for (auto _ : st) benchmark::DoNotOptimize(monte_carlo_deviation(*s, 1000, kScore, 2000, 1, policy()).hits);
}

struct Isac {
  Sdmc sdmc = load_channel(kData + "isac_2x2x2.chan").as_sdmc();
  Pmf ps{std::vector<double>{0.6, 0.4}};
  DistortionFn d = DistortionFn::hamming(2);
  IsacCode code = build_code(load_code(kData + "code_n4.code"), sdmc, ps, d);
};

const Isac& isac() {
  static const Isac v;
  return v;
}

void BM_FrontierSerial(benchmark::State& st) {
  const Isac& i = isac();
  for (auto _ : st) benchmark::DoNotOptimize(serial::frontier_sweep(i.sdmc, i.ps, i.d, 2001).size());
}
void BM_FrontierParallel(benchmark::State& st) {
  const Isac& i = isac();
  for (auto _ : st) benchmark::DoNotOptimize(frontier_sweep(i.sdmc, i.ps, i.d, 2001, policy()).size());
}

void BM_SimulateSerial(benchmark::State& st) {
  const Isac& i = isac();
  for (auto _ : st) benchmark::DoNotOptimize(serial::simulate_code(i.code, i.sdmc, i.ps, i.d, 0.5, 20000, 1).pe);
}
void BM_SimulateParallel(benchmark::State& st) {
  const Isac& i = isac();
  for (auto _ : st) benchmark::DoNotOptimize(simulate_code(i.code, i.sdmc, i.ps, i.d, 0.5, 20000, 1, policy()).pe);
}

}  // namespace

BENCHMARK(BM_ExhaustiveSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExhaustiveParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MonteCarloSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FrontierSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FrontierParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SimulateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
