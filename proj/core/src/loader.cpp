#include "dpt/loader.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "bounded_queue.hpp"
#include "dpt/charge.hpp"
#include "dpt/errors.hpp"
#include "dpt/random.hpp"

namespace dpt {

void LoaderConfig::validate() const {
  if (num_workers < 1) throw UsageError("num_workers must be >= 1");
  if (prefetch_factor < 1) throw UsageError("prefetch_factor must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (jitter < Nanos::zero()) throw UsageError("jitter must be non-negative");
  transform.validate();
  latency.validate();
}

void SinkConfig::validate() const {
  if (num_sinks < 1) throw UsageError("num_sinks must be >= 1");
  if (drain_per_batch < Nanos::zero()) throw UsageError("drain_per_batch must be non-negative");
}

std::vector<std::size_t> assign_batches(std::size_t batch_count, std::size_t num_workers) {
  if (num_workers < 1) throw UsageError("num_workers must be >= 1");
  std::vector<std::size_t> owner(batch_count);
  for (std::size_t b = 0; b < batch_count; ++b) owner[b] = b % num_workers;
  return owner;
}

namespace {

std::size_t peak_depth(const ScheduleTrace& t, std::size_t workers) {
  // Depth right after a push: the batch itself plus earlier batches of the same
  // worker still waiting. A pop at the push instant has already freed its slot.
  // Dispatch times are non-decreasing in seq, so the backwards scan can stop early.
  std::size_t peak = 0;
  const std::size_t n = t.enqueued.size();
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t depth = 1;
    for (std::size_t prev = s; prev >= workers; ) {
      prev -= workers;
      if (t.dispatched[prev] <= t.enqueued[s]) break;
      ++depth;
    }
    peak = std::max(peak, depth);
  }
  return peak;
}

}  // namespace

ScheduleTrace trace_schedule(const LoaderConfig& config, const SinkConfig& sinks,
                             std::span<const Nanos> produce_costs) {
  if (config.num_workers < 1 || config.prefetch_factor < 1) {
    throw UsageError("num_workers and prefetch_factor must be >= 1");
  }
  sinks.validate();

  const std::size_t n = produce_costs.size();
  const std::size_t workers = config.num_workers;
  const std::size_t depth = config.prefetch_factor;

  ScheduleTrace t;
  t.produce_start.resize(n);
  t.produce_end.resize(n);
  t.enqueued.resize(n);
  t.dispatched.resize(n);
  t.drain_start.resize(n);
  t.drain_end.resize(n);

  // Every quantity for batch s depends only on batches < s, so one pass in seq order suffices.
  std::vector<Nanos> sink_free(sinks.num_sinks, Nanos::zero());
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t local = s / workers;
    t.produce_start[s] = local == 0 ? Nanos::zero() : t.enqueued[s - workers];
    t.produce_end[s] = t.produce_start[s] + produce_costs[s];
    t.enqueued[s] = t.produce_end[s];
    if (local >= depth) t.enqueued[s] = std::max(t.enqueued[s], t.dispatched[s - depth * workers]);
    t.dispatched[s] = s == 0 ? t.enqueued[s] : std::max(t.enqueued[s], t.drain_start[s - 1]);
    Nanos& free_at = sink_free[s % sinks.num_sinks];
    t.drain_start[s] = std::max(t.dispatched[s], free_at);
    t.drain_end[s] = t.drain_start[s] + sinks.drain_per_batch;
    free_at = t.drain_end[s];
    t.transfer_time = std::max(t.transfer_time, t.drain_end[s]);
  }

  t.peak_queue_depth = peak_depth(t, workers);
  if (t.peak_queue_depth > depth) {
    throw std::logic_error("schedule exceeded prefetch_factor: depth " + std::to_string(t.peak_queue_depth));
  }
  return t;
}

Nanos simulate_schedule(const LoaderConfig& config, const SinkConfig& sinks, std::span<const Nanos> produce_costs) {
  return trace_schedule(config, sinks, produce_costs).transfer_time;
}

namespace {

struct Produced {
  Batch batch;
  Nanos read{0};
  Nanos transform{0};
  Nanos jitter{0};
};

Nanos batch_jitter(const LoaderConfig& config, std::uint64_t epoch_index, std::uint64_t seq) {
  if (config.jitter <= Nanos::zero()) return Nanos::zero();
  const std::uint64_t r = mix_seed(mix_seed(config.seed ^ 0x6A09E667F3BCC909ULL, epoch_index), seq);
  return Nanos{static_cast<std::int64_t>(r % static_cast<std::uint64_t>(config.jitter.count() + 1))};
}

Produced produce_batch(const LoaderConfig& config, const Manifest& manifest, CacheEmulator& cache,
                       const IdList& ids, std::uint64_t seq, std::uint64_t epoch_index) {
  Produced out;
  std::vector<Sample> samples;
  samples.reserve(ids.size());
  for (const std::uint64_t id : ids) {
    ItemRead raw = read_item(manifest, id, cache, config.latency);
    Transformed tr = transform_item(std::move(raw.bytes), config.transform);
    out.read += raw.elapsed;
    out.transform += tr.elapsed;
    samples.push_back(Sample{id, std::move(tr.bytes), raw.elapsed + tr.elapsed});
  }
  out.batch = collate(std::move(samples), seq);
  out.jitter = batch_jitter(config, epoch_index, seq);
  out.batch.produce_elapsed += out.jitter;
  return out;
}

void check_sink_budget(const EpochPlan& plan, const Manifest& manifest, const SinkConfig& sinks) {
  for (std::size_t s = 0; s < plan.batches.size(); ++s) {
    std::uint64_t bytes = 0;
    for (const std::uint64_t id : plan.batches[s]) {
      if (id >= manifest.item_count()) throw UsageError("plan references unknown item " + std::to_string(id));
      bytes = saturating_add(bytes, manifest.items[id].byte_size);
    }
    if (bytes > sinks.sink_budget) {
      throw SinkOverflowError("batch " + std::to_string(s) + " needs " + std::to_string(bytes) +
                              " bytes, consumer budget is " + std::to_string(sinks.sink_budget));
    }
  }
}

EpochReport run_virtual(const LoaderConfig& config, const SinkConfig& sinks, const Manifest& manifest,
                        CacheEmulator& cache, const EpochPlan& plan, std::uint64_t epoch_index,
                        const BatchObserver& observer) {
  EpochReport report;
  std::vector<Nanos> costs;
  costs.reserve(plan.batches.size());
  for (std::size_t s = 0; s < plan.batches.size(); ++s) {
    Produced p = produce_batch(config, manifest, cache, plan.batches[s], s, epoch_index);
    costs.push_back(p.batch.produce_elapsed);
    if (observer) observer(p.batch);
    report.delivery_order.push_back(s);
  }
  report.transfer_time = simulate_schedule(config, sinks, costs);
  return report;
}

EpochReport run_realtime(const LoaderConfig& config, const SinkConfig& sinks, const Manifest& manifest,
                         CacheEmulator& cache, const EpochPlan& plan, std::uint64_t epoch_index,
                         const BatchObserver& observer) {
  using Clock = std::chrono::steady_clock;
  const std::size_t n = plan.batches.size();
  const std::size_t workers = config.num_workers;

  std::vector<std::unique_ptr<detail::BoundedQueue<Batch>>> worker_queues;
  for (std::size_t w = 0; w < workers; ++w) {
    worker_queues.push_back(std::make_unique<detail::BoundedQueue<Batch>>(config.prefetch_factor));
  }
  std::vector<std::unique_ptr<detail::BoundedQueue<std::uint64_t>>> sink_queues;
  for (std::size_t g = 0; g < sinks.num_sinks; ++g) {
    sink_queues.push_back(std::make_unique<detail::BoundedQueue<std::uint64_t>>(1));
  }

  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto abort_all = [&](std::exception_ptr e) {
    {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = e;
    }
    for (auto& q : worker_queues) q->close();
    for (auto& q : sink_queues) q->close();
  };

  const Clock::time_point start = Clock::now();
  std::atomic<std::int64_t> last_drain_ns{0};

  std::vector<std::jthread> threads;
  threads.reserve(workers + sinks.num_sinks);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t s = w; s < n; s += workers) {
          Produced p = produce_batch(config, manifest, cache, plan.batches[s], s, epoch_index);
          wait_wall(p.read + p.jitter);
          spin_cpu(p.transform);
          if (!worker_queues[w]->push(std::move(p.batch))) return;
        }
      } catch (...) {
        abort_all(std::current_exception());
      }
    });
  }
  for (std::size_t g = 0; g < sinks.num_sinks; ++g) {
    threads.emplace_back([&, g] {
      while (auto seq = sink_queues[g]->pop()) {
        wait_wall(sinks.drain_per_batch);
        const auto done = std::chrono::duration_cast<Nanos>(Clock::now() - start).count();
        std::int64_t prev = last_drain_ns.load();
        while (prev < done && !last_drain_ns.compare_exchange_weak(prev, done)) {
        }
      }
    });
  }

  EpochReport report;
  try {
    for (std::size_t s = 0; s < n; ++s) {
      std::optional<Batch> batch = worker_queues[s % workers]->pop();
      if (!batch) break;
      if (batch->seq != s) throw std::logic_error("out-of-order batch " + std::to_string(batch->seq));
      if (observer) observer(*batch);
      report.delivery_order.push_back(s);
      if (!sink_queues[s % sinks.num_sinks]->push(s)) break;
    }
  } catch (...) {
    abort_all(std::current_exception());
  }
  for (auto& q : sink_queues) q->close();
  for (auto& t : threads) t.join();
  for (auto& q : worker_queues) q->close();

  if (first_error) std::rethrow_exception(first_error);
  report.transfer_time = Nanos{last_drain_ns.load()};
  return report;
}

}  // namespace

EpochReport run_epoch(const LoaderConfig& config, const SinkConfig& sinks, const Manifest& manifest,
                      CacheEmulator& cache, std::uint64_t epoch_index, const BatchObserver& observer) {
  config.validate();
  sinks.validate();

  const EpochPlan plan = make_epoch_plan(manifest.item_count(), config.seed, epoch_index, config.batch_size,
                                         config.shuffle, config.drop_last);
  check_sink_budget(plan, manifest, sinks);

  const std::uint64_t hits_before = cache.hit_count();
  const std::uint64_t misses_before = cache.miss_count();

  EpochReport report = config.mode == TimingMode::Virtual
                           ? run_virtual(config, sinks, manifest, cache, plan, epoch_index, observer)
                           : run_realtime(config, sinks, manifest, cache, plan, epoch_index, observer);

  report.batch_count = plan.batches.size();
  report.per_worker_batches.assign(config.num_workers, 0);
  for (const std::size_t w : assign_batches(report.batch_count, config.num_workers)) ++report.per_worker_batches[w];
  report.cache_hits = cache.hit_count() - hits_before;
  report.cache_misses = cache.miss_count() - misses_before;
  return report;
}

}  // namespace dpt
