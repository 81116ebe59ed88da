#include "dpt/tuner.hpp"

#include <string>

#include "dpt/errors.hpp"

namespace dpt {

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::Total: return "total";
    case Objective::FirstEpoch: return "first_epoch";
    case Objective::SteadyState: return "steady_state";
  }
  return "total";
}

std::string_view to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::Ok: return "ok";
    case TrialStatus::HostOverflow: return "host_overflow";
    case TrialStatus::SinkOverflow: return "sink_overflow";
  }
  return "ok";
}

Objective parse_objective(std::string_view text) {
  if (text == "total") return Objective::Total;
  if (text == "first_epoch") return Objective::FirstEpoch;
  if (text == "steady_state") return Objective::SteadyState;
  throw UsageError("unknown objective '" + std::string(text) + "' (total, first_epoch, steady_state)");
}

TrialStatus parse_trial_status(std::string_view text) {
  if (text == "ok") return TrialStatus::Ok;
  if (text == "host_overflow") return TrialStatus::HostOverflow;
  if (text == "sink_overflow") return TrialStatus::SinkOverflow;
  throw UsageError("unknown trial status '" + std::string(text) + "'");
}

void TuneConfig::validate() const {
  if (gpus < 1) throw UsageError("G (gpus) must be >= 1");
  if (cpus < gpus) throw UsageError("N (cpus) must be >= G (gpus)");
  if (max_prefetch < 1) throw UsageError("P (max prefetch) must be >= 1");
  if (worker_limit() < 1) throw UsageError("max_workers must be >= 1");
  if (epochs_per_trial < 1) throw UsageError("epochs_per_trial must be >= 1");
  if (objective == Objective::SteadyState && epochs_per_trial < 2) {
    throw UsageError("steady_state objective needs at least 2 epochs per trial");
  }
  if (drain_per_batch < Nanos::zero()) throw UsageError("drain_per_batch must be non-negative");
  if (base.batch_size < 1) throw UsageError("batch_size must be >= 1");
  base.transform.validate();
  base.latency.validate();
}

std::uint64_t estimate_memory(std::uint64_t n_worker, std::uint64_t n_prefetch, std::uint64_t batch_size,
                              std::uint64_t item_bytes, std::uint64_t cache_capacity) {
  const std::uint64_t in_flight =
      saturating_mul(saturating_mul(saturating_mul(n_worker, n_prefetch), batch_size), item_bytes);
  return saturating_add(in_flight, cache_capacity);
}

std::vector<std::size_t> worker_candidates(const TuneConfig& config) {
  std::vector<std::size_t> out;
  if (config.gpus < 1) return out;
  for (std::size_t i = config.gpus; i <= config.worker_limit(); i += config.gpus) out.push_back(i);
  return out;
}

std::vector<Cell> search_grid(const TuneConfig& config) {
  std::vector<Cell> cells;
  for (const std::size_t i : worker_candidates(config)) {
    for (std::size_t j = 1; j <= config.max_prefetch; ++j) cells.push_back({i, j});
  }
  return cells;
}

Nanos objective_value(const TrialResult& trial, Objective objective) {
  if (trial.status != TrialStatus::Ok || trial.epoch_times.empty()) {
    throw UsageError("objective of a trial without measurements");
  }
  switch (objective) {
    case Objective::Total: {
      Nanos sum{0};
      for (const Nanos t : trial.epoch_times) sum += t;
      return sum;
    }
    case Objective::FirstEpoch:
      return trial.epoch_times.front();
    case Objective::SteadyState: {
      if (trial.epoch_times.size() < 2) throw UsageError("steady_state objective needs at least 2 epochs");
      Nanos sum{0};
      for (std::size_t e = 1; e < trial.epoch_times.size(); ++e) sum += trial.epoch_times[e];
      return sum / static_cast<std::int64_t>(trial.epoch_times.size() - 1);
    }
  }
  throw UsageError("unknown objective");
}

LoaderConfig trial_loader_config(const TuneConfig& config, std::size_t workers, std::size_t prefetch) {
  LoaderConfig lc = config.base;
  lc.num_workers = workers;
  lc.prefetch_factor = prefetch;
  return lc;
}

SinkConfig trial_sink_config(const TuneConfig& config) {
  return SinkConfig{config.gpus, config.drain_per_batch, config.sink_budget};
}

TrialResult run_trial(std::size_t workers, std::size_t prefetch, const TuneConfig& config,
                      const Manifest& manifest, CacheEmulator& cache) {
  if (workers < 1 || prefetch < 1) throw UsageError("trial needs workers >= 1 and prefetch >= 1");

  TrialResult trial;
  trial.n_worker = workers;
  trial.n_prefetch = prefetch;

  if (config.reset_cache_between_trials) reset_cache(cache);

  const std::uint64_t estimate =
      estimate_memory(workers, prefetch, config.base.batch_size, manifest.max_item_bytes(), cache.capacity());
  if (check_overflow(estimate, config.host_budget)) {
    trial.status = TrialStatus::HostOverflow;
    return trial;
  }

  const LoaderConfig lc = trial_loader_config(config, workers, prefetch);
  const SinkConfig sc = trial_sink_config(config);
  const std::string context = "trial (" + std::to_string(workers) + ", " + std::to_string(prefetch) + ")";
  for (std::size_t epoch = 0; epoch < config.epochs_per_trial; ++epoch) {
    try {
      trial.epoch_times.push_back(run_epoch(lc, sc, manifest, cache, epoch).transfer_time);
    } catch (const SinkOverflowError&) {
      trial.status = TrialStatus::SinkOverflow;
      trial.epoch_times.clear();
      trial.total_time = Nanos::zero();
      return trial;
    } catch (const Error& e) {
      rethrow_with_context(e, context);
    }
    trial.total_time += trial.epoch_times.back();
  }
  return trial;
}

TuneOutcome dpt_search(const TuneConfig& config, const Manifest& manifest, CacheEmulator& cache,
                       const TrialObserver& observer) {
  config.validate();

  TuneOutcome outcome;
  outcome.objective = config.objective;
  bool found = false;

  for (const std::size_t i : worker_candidates(config)) {
    for (std::size_t j = 1; j <= config.max_prefetch; ++j) {
      TrialResult trial = run_trial(i, j, config, manifest, cache);
      if (observer) observer(trial);
      const TrialStatus status = trial.status;
      if (status == TrialStatus::Ok) {
        const Nanos value = objective_value(trial, config.objective);
        if (!found || value < outcome.optimal_time) {
          found = true;
          outcome.optimal_time = value;
          outcome.n_worker = i;
          outcome.n_prefetch = j;
        }
      }
      outcome.trials.push_back(std::move(trial));
      if (status == TrialStatus::HostOverflow) {
        for (std::size_t skipped = j; skipped <= config.max_prefetch; ++skipped) {
          outcome.pruned.push_back({i, skipped});
        }
        break;
      }
    }
  }

  const bool baseline_in_grid =
      kBaselineCell.n_worker % config.gpus == 0 && kBaselineCell.n_worker <= config.worker_limit() &&
      kBaselineCell.n_prefetch <= config.max_prefetch;
  outcome.baseline = run_trial(kBaselineCell.n_worker, kBaselineCell.n_prefetch, config, manifest, cache);
  outcome.baseline.baseline_only = !baseline_in_grid;
  if (observer) observer(outcome.baseline);

  if (!found) {
    throw NoFeasibleConfigurationError("no feasible (workers, prefetch) cell among " +
                                       std::to_string(outcome.trials.size()) + " attempted");
  }
  return outcome;
}

}  // namespace dpt
