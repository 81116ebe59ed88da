#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "dpt/dataset.hpp"
#include "dpt/pipeline.hpp"
#include "dpt/units.hpp"

namespace dpt {

enum class TimingMode {
  Virtual,   // costs are accumulated and scheduled exactly, nothing waits
  Realtime,  // costs are actually waited out by the executing threads
};

struct LoaderConfig {
  std::size_t num_workers = 1;
  std::size_t prefetch_factor = 2;
  std::size_t batch_size = 1;
  bool shuffle = false;
  std::uint64_t seed = 0;
  bool drop_last = false;
  TransformCost transform{};
  LatencyModel latency{};
  TimingMode mode = TimingMode::Virtual;
  /// Upper bound of an extra per-batch production delay, drawn from (seed, epoch, seq).
  Nanos jitter{0};

  void validate() const;
};

/// Consumers standing in for GPUs.
struct SinkConfig {
  std::size_t num_sinks = 1;
  Nanos drain_per_batch{0};
  std::uint64_t sink_budget = std::numeric_limits<std::uint64_t>::max();

  void validate() const;
};

struct EpochReport {
  Nanos transfer_time{0};
  std::size_t batch_count = 0;
  std::vector<std::uint64_t> delivery_order;
  std::vector<std::size_t> per_worker_batches;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
};

/// Round-robin: batch b goes to worker b mod num_workers.
[[nodiscard]] std::vector<std::size_t> assign_batches(std::size_t batch_count, std::size_t num_workers);

/// Per-batch event times of a virtual-time schedule.
struct ScheduleTrace {
  std::vector<Nanos> produce_start;
  std::vector<Nanos> produce_end;
  std::vector<Nanos> enqueued;    // pushed into the worker's queue
  std::vector<Nanos> dispatched;  // popped by the dispatcher
  std::vector<Nanos> drain_start;
  std::vector<Nanos> drain_end;
  Nanos transfer_time{0};
  /// Largest number of batches ever sitting in one worker's queue.
  std::size_t peak_queue_depth = 0;
};

/// Deterministic schedule of the loader's queueing contract:
///  - worker w serially produces batches w, w+W, ... and blocks on a full queue
///    of capacity prefetch_factor;
///  - one dispatcher pops batches in global seq order;
///  - batch s drains on sink s mod G once that sink is idle.
/// Throws std::logic_error if a queue ever exceeds prefetch_factor.
[[nodiscard]] ScheduleTrace trace_schedule(const LoaderConfig& config, const SinkConfig& sinks,
                                           std::span<const Nanos> produce_costs);

/// Completion time of the last drain in trace_schedule.
[[nodiscard]] Nanos simulate_schedule(const LoaderConfig& config, const SinkConfig& sinks,
                                      std::span<const Nanos> produce_costs);

/// Called once per batch, in seq order, as the dispatcher releases it.
using BatchObserver = std::function<void(const Batch&)>;

/// Runs one epoch: plan, read, transform, collate, prefetch, ordered delivery, drain.
///
/// Throws SinkOverflowError before any I/O when a batch exceeds sinks.sink_budget,
/// and propagates dataset errors raised inside workers.
EpochReport run_epoch(const LoaderConfig& config, const SinkConfig& sinks, const Manifest& manifest,
                      CacheEmulator& cache, std::uint64_t epoch_index,
                      const BatchObserver& observer = {});

}  // namespace dpt
