// Serial reference vs OpenMP kernels.  The parallel versions are
// bit-identical to the serial ones (tests enforce that); these benchmarks
// answer the remaining question of what the parallelism buys.

#include <benchmark/benchmark.h>

#include <vector>

#include "psqkd/keyrate_engine.hpp"
#include "psqkd/simulator.hpp"

using namespace psqkd;
using eve_model::Attack;
using info_theory::Channel;
using info_theory::Modulation;

namespace {

const Channel kChannel(0.5, 0.2);
const Modulation kMod(3.0);

const std::vector<simulator::SiftedRecord>& sifted_fixture() {
  static const auto records = [] {
    const auto raw = simulator::generate(kMod, 400000, 7);
    return simulator::sift(simulator::transmit(kChannel, raw, 7), 7).records;
  }();
  return records;
}

void bm_region_map_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(keyrate_engine::region_map_serial(
        kChannel, Attack::individual, 10.0, 10.0, n, n));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void bm_region_map_parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(keyrate_engine::region_map(
        kChannel, Attack::individual, 10.0, 10.0, n, n));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void bm_empirical_rate_serial(benchmark::State& state) {
  const auto& records = sifted_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulator::empirical_rate_serial(records, kChannel,
                                         Attack::individual));
  }
  state.SetItemsProcessed(state.iterations() * records.size());
}

void bm_empirical_rate_parallel(benchmark::State& state) {
  const auto& records = sifted_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulator::empirical_rate(records, kChannel, Attack::individual));
  }
  state.SetItemsProcessed(state.iterations() * records.size());
}

void bm_secure_rate_serial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(keyrate_engine::secure_rate_serial(
        kChannel, kMod, Attack::individual, 1e-6));
  }
}

void bm_secure_rate_parallel(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        keyrate_engine::secure_rate(kChannel, kMod, Attack::individual, 1e-6));
  }
}

void bm_secure_rate_collective(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        keyrate_engine::secure_rate(kChannel, kMod, Attack::collective, 1e-5));
  }
}

}  // namespace

BENCHMARK(bm_region_map_serial)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_region_map_parallel)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_empirical_rate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_empirical_rate_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_secure_rate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_secure_rate_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_secure_rate_collective)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
