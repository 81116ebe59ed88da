#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dpt/loader.hpp"

namespace {

void BM_SimulateSchedule(benchmark::State& state) {
  const auto batches = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::vector<dpt::Nanos> costs(batches);
  for (auto& c : costs) c = dpt::Nanos(1'000 + rng() % 100'000);
  dpt::LoaderConfig cfg;
  cfg.num_workers = static_cast<std::size_t>(state.range(1));
  cfg.prefetch_factor = 2;
  dpt::SinkConfig sinks;
  sinks.num_sinks = 2;
  sinks.drain_per_batch = dpt::Nanos(20'000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dpt::simulate_schedule(cfg, sinks, costs));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batches));
}
BENCHMARK(BM_SimulateSchedule)->ArgsProduct({{64, 1024, 16384}, {1, 8, 48}});

}  // namespace
