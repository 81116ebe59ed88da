#include <benchmark/benchmark.h>

#include <random>

#include "dpt/dataset.hpp"

namespace {

// Uniform random ids over a working set `range(1)` times the cache's item capacity.
void BM_CacheAccess(benchmark::State& state) {
  constexpr std::uint64_t item = 4096;
  const auto slots = static_cast<std::uint64_t>(state.range(0));
  const auto ids = slots * static_cast<std::uint64_t>(state.range(1));
  dpt::CacheEmulator cache(slots * item);
  std::mt19937_64 rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cache.access(rng() % ids, item));
  }
  state.counters["hit_rate"] =
      static_cast<double>(cache.hit_count()) / static_cast<double>(cache.hit_count() + cache.miss_count());
}
BENCHMARK(BM_CacheAccess)->ArgsProduct({{1024, 65536}, {1, 2}});

}  // namespace
