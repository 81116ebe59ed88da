#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "dpt/dataset.hpp"
#include "dpt/loader.hpp"
#include "dpt/units.hpp"

namespace dpt {

enum class Objective { Total, FirstEpoch, SteadyState };
enum class TrialStatus { Ok, HostOverflow, SinkOverflow };

[[nodiscard]] std::string_view to_string(Objective objective);
[[nodiscard]] std::string_view to_string(TrialStatus status);
[[nodiscard]] Objective parse_objective(std::string_view text);
[[nodiscard]] TrialStatus parse_trial_status(std::string_view text);

struct Cell {
  std::size_t n_worker = 0;
  std::size_t n_prefetch = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

/// Framework default (workers, prefetch) every outcome is compared against.
inline constexpr Cell kBaselineCell{6, 2};

struct TuneConfig {
  std::size_t cpus = 1;          // N
  std::size_t gpus = 1;          // G
  std::size_t max_prefetch = 1;  // P
  std::optional<std::size_t> max_workers;  // defaults to cpus
  std::uint64_t host_budget = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t sink_budget = std::numeric_limits<std::uint64_t>::max();
  std::size_t epochs_per_trial = 2;
  Objective objective = Objective::Total;
  /// batch size, seed, cost models and timing mode; workers/prefetch are overridden per trial.
  LoaderConfig base{};
  Nanos drain_per_batch{0};
  bool reset_cache_between_trials = true;

  [[nodiscard]] std::size_t worker_limit() const noexcept { return max_workers.value_or(cpus); }
  void validate() const;
};

struct TrialResult {
  std::size_t n_worker = 0;
  std::size_t n_prefetch = 0;
  std::vector<Nanos> epoch_times;
  Nanos total_time{0};
  TrialStatus status = TrialStatus::Ok;
  bool baseline_only = false;  // measured for comparison, not part of the searched grid

  [[nodiscard]] Cell cell() const noexcept { return {n_worker, n_prefetch}; }
  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct TuneOutcome {
  std::size_t n_worker = 0;
  std::size_t n_prefetch = 0;
  Nanos optimal_time{0};
  Objective objective = Objective::Total;
  std::vector<TrialResult> trials;  // in search order, overflowing cells included
  std::vector<Cell> pruned;         // cells never measured because of host overflow
  TrialResult baseline;

  friend bool operator==(const TuneOutcome&, const TuneOutcome&) = default;
};

/// In-flight prefetched batches plus the cache residency bound.
[[nodiscard]] std::uint64_t estimate_memory(std::uint64_t n_worker, std::uint64_t n_prefetch,
                                            std::uint64_t batch_size, std::uint64_t item_bytes,
                                            std::uint64_t cache_capacity);

/// Strict: an estimate equal to the budget is admitted.
[[nodiscard]] constexpr bool check_overflow(std::uint64_t estimate, std::uint64_t host_budget) {
  return estimate > host_budget;
}

/// G, 2G, ... up to the largest multiple of G not above worker_limit().
[[nodiscard]] std::vector<std::size_t> worker_candidates(const TuneConfig& config);

/// Every (workers, prefetch) cell in search order, ignoring budgets.
[[nodiscard]] std::vector<Cell> search_grid(const TuneConfig& config);

/// Seconds minimized for the chosen objective. Throws UsageError for a non-ok trial
/// or a steady-state objective with fewer than two epochs.
[[nodiscard]] Nanos objective_value(const TrialResult& trial, Objective objective);

[[nodiscard]] LoaderConfig trial_loader_config(const TuneConfig& config, std::size_t workers,
                                               std::size_t prefetch);
[[nodiscard]] SinkConfig trial_sink_config(const TuneConfig& config);

/// Measures one cell: optional cache reset, host overflow pre-check, then
/// epochs_per_trial epochs through the loader.
TrialResult run_trial(std::size_t workers, std::size_t prefetch, const TuneConfig& config,
                      const Manifest& manifest, CacheEmulator& cache);

using TrialObserver = std::function<void(const TrialResult&)>;

/// Grid search over workers (multiples of G) and prefetch 1..P with inner-loop
/// break on host overflow. Ties keep the earlier cell. The baseline cell is
/// measured after the grid. Throws NoFeasibleConfigurationError when no cell is ok.
TuneOutcome dpt_search(const TuneConfig& config, const Manifest& manifest, CacheEmulator& cache,
                       const TrialObserver& observer = {});

}  // namespace dpt
