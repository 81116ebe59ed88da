#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpt/dataset.hpp"
#include "dpt/errors.hpp"
#include "dpt/loader.hpp"
#include "dpt/report.hpp"
#include "dpt/tuner.hpp"
#include "dpt/units.hpp"

namespace dpt::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct GenArgs {
  std::string out;
  std::uint64_t items = 0;
  std::optional<std::string> item_bytes;
  std::optional<std::uint64_t> resolution;
  std::uint32_t labels = 10;
  std::uint64_t seed = 0;
};

/// Flags shared by bench and tune.
struct LoadArgs {
  std::string manifest;
  std::size_t batch = 32;
  std::size_t epochs = 2;
  std::uint64_t seed = 0;
  bool shuffle = false;
  bool drop_last = false;
  std::string mode = "virtual";
  std::string miss_seek = "100us";
  std::string miss_per_byte = "2ns";
  std::string hit_seek = "1us";
  std::string hit_per_byte = "100ps";
  std::string transform_per_item = "20us";
  std::string transform_per_byte = "0";
  std::string drain = "0";
  std::string jitter = "0";
  std::string cache_capacity = "16GiB";
  std::string host_budget;  // empty: unlimited
  std::string sink_budget;
  std::string out;
};

struct BenchArgs {
  std::size_t workers = 6;
  std::size_t prefetch = 2;
  std::size_t sinks = 1;
};

struct TuneArgs {
  std::size_t cpus = 0;
  std::size_t gpus = 1;
  std::size_t max_prefetch = 4;
  std::optional<std::size_t> max_workers;
  std::string objective = "total";
  bool keep_cache = false;
};

struct ReportArgs {
  std::string run;
  std::string baseline_run;
  std::optional<std::size_t> batch;
  std::string variant;
};

void add_load_flags(CLI::App& cmd, LoadArgs& a) {
  cmd.add_option("--manifest", a.manifest, "Manifest file or dataset directory")->required();
  cmd.add_option("--batch", a.batch, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  cmd.add_option("--epochs", a.epochs, "Epochs per measurement")->check(CLI::PositiveNumber)->capture_default_str();
  cmd.add_option("--seed", a.seed, "Shuffle and jitter seed")->capture_default_str();
  cmd.add_flag("--shuffle", a.shuffle, "Reshuffle every epoch");
  cmd.add_flag("--drop-last", a.drop_last, "Drop a short final batch");
  cmd.add_option("--mode", a.mode, "Timing mode")
      ->check(CLI::IsMember({"virtual", "realtime"}))
      ->capture_default_str();
  cmd.add_option("--miss-seek", a.miss_seek, "Per-item latency on a cache miss")->capture_default_str();
  cmd.add_option("--miss-per-byte", a.miss_per_byte, "Per-byte latency on a cache miss")->capture_default_str();
  cmd.add_option("--hit-seek", a.hit_seek, "Per-item latency on a cache hit")->capture_default_str();
  cmd.add_option("--hit-per-byte", a.hit_per_byte, "Per-byte latency on a cache hit")->capture_default_str();
  cmd.add_option("--transform-per-item", a.transform_per_item, "CPU cost per item")->capture_default_str();
  cmd.add_option("--transform-per-byte", a.transform_per_byte, "CPU cost per byte")->capture_default_str();
  cmd.add_option("--drain", a.drain, "Consumer time per batch")->capture_default_str();
  cmd.add_option("--jitter", a.jitter, "Max extra production delay per batch")->capture_default_str();
  cmd.add_option("--cache-capacity", a.cache_capacity, "Emulated page cache size")->capture_default_str();
  cmd.add_option("--host-budget", a.host_budget, "Main-memory budget (default unlimited)");
  cmd.add_option("--sink-budget", a.sink_budget, "Consumer memory per batch (default unlimited)");
  cmd.add_option("--out", a.out, "Run directory (default $DPT_RUN_DIR/<name> or runs/<name>)");
}

std::uint64_t parse_budget(const std::string& text) {
  if (text.empty()) return std::numeric_limits<std::uint64_t>::max();
  return parse_bytes(text);
}

LoaderConfig loader_config(const LoadArgs& a) {
  LoaderConfig c;
  c.batch_size = a.batch;
  c.seed = a.seed;
  c.shuffle = a.shuffle;
  c.drop_last = a.drop_last;
  c.mode = a.mode == "realtime" ? TimingMode::Realtime : TimingMode::Virtual;
  c.latency.miss_seek = parse_duration(a.miss_seek);
  c.latency.miss_per_byte = parse_per_byte(a.miss_per_byte);
  c.latency.hit_seek = parse_duration(a.hit_seek);
  c.latency.hit_per_byte = parse_per_byte(a.hit_per_byte);
  c.transform.per_item = parse_duration(a.transform_per_item);
  c.transform.per_byte = parse_per_byte(a.transform_per_byte);
  c.jitter = parse_duration(a.jitter);
  c.latency.validate();
  c.transform.validate();
  return c;
}

std::string stable_name(const std::string& prefix, const std::vector<std::string>& args) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : args) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xFF;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return prefix + "-" + buf;
}

fs::path resolve_run_dir(const std::string& explicit_out, const std::string& name) {
  if (!explicit_out.empty()) return explicit_out;
  const char* root = std::getenv("DPT_RUN_DIR");
  return fs::path(root && *root ? root : "runs") / name;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory '" + dir.string() + "': " + ec.message());
}

json loader_json(const LoaderConfig& c, const LoadArgs& a) {
  return json{{"manifest", a.manifest},
              {"batch_size", c.batch_size},
              {"epochs", a.epochs},
              {"seed", c.seed},
              {"shuffle", c.shuffle},
              {"drop_last", c.drop_last},
              {"mode", a.mode},
              {"miss_seek_ns", c.latency.miss_seek.count()},
              {"miss_per_byte_ps", c.latency.miss_per_byte.picos_per_byte},
              {"hit_seek_ns", c.latency.hit_seek.count()},
              {"hit_per_byte_ps", c.latency.hit_per_byte.picos_per_byte},
              {"transform_per_item_ns", c.transform.per_item.count()},
              {"transform_per_byte_ps", c.transform.per_byte.picos_per_byte},
              {"drain_ns", parse_duration(a.drain).count()},
              {"jitter_ns", c.jitter.count()},
              {"cache_capacity", parse_bytes(a.cache_capacity)},
              {"host_budget", parse_budget(a.host_budget)},
              {"sink_budget", parse_budget(a.sink_budget)}};
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + file.string() + "'");
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  DatasetSpec spec;
  spec.item_count = a.items;
  spec.item_bytes = a.resolution ? resolution_item_bytes(*a.resolution) : parse_bytes(*a.item_bytes);
  spec.label_count = a.labels;
  spec.seed = a.seed;
  const Manifest m = generate_dataset(a.out, spec);
  out << "items=" << m.item_count() << " item_bytes=" << spec.item_bytes << " total_bytes=" << m.total_bytes
      << " fingerprint=" << m.spec_fingerprint << '\n';
  return kExitOk;
}

int cmd_bench(const LoadArgs& a, const BenchArgs& b, const std::vector<std::string>& raw, std::ostream& out) {
  const Manifest manifest = load_manifest(a.manifest);

  TuneConfig cfg;
  cfg.base = loader_config(a);
  cfg.gpus = b.sinks;
  cfg.cpus = std::max(b.workers, b.sinks);
  cfg.epochs_per_trial = a.epochs;
  cfg.drain_per_batch = parse_duration(a.drain);
  cfg.host_budget = parse_budget(a.host_budget);
  cfg.sink_budget = parse_budget(a.sink_budget);
  CacheEmulator cache(parse_bytes(a.cache_capacity));

  const fs::path run_dir = resolve_run_dir(a.out, stable_name("bench", raw));
  ensure_dir(run_dir);
  json snapshot = loader_json(cfg.base, a);
  snapshot["workers"] = b.workers;
  snapshot["prefetch"] = b.prefetch;
  snapshot["sinks"] = b.sinks;
  write_text(run_dir / "config.json", snapshot.dump(2) + "\n");

  const TrialResult trial = run_trial(b.workers, b.prefetch, cfg, manifest, cache);
  const std::vector<TrialResult> trials{trial};
  write_grid_csv(run_dir / kGridFileName, grid_records(trials));

  if (trial.status != TrialStatus::Ok) {
    out << "workers=" << b.workers << " prefetch=" << b.prefetch << " status=" << to_string(trial.status) << '\n';
    return kExitOverflow;
  }
  for (std::size_t e = 0; e < trial.epoch_times.size(); ++e) {
    out << "epoch=" << e << " workers=" << b.workers << " prefetch=" << b.prefetch
        << " transfer_time=" << format_seconds(trial.epoch_times[e]) << "s\n";
  }
  out << "total_time=" << format_seconds(trial.total_time) << "s run_dir=" << run_dir.string() << '\n';
  return kExitOk;
}

int cmd_tune(const LoadArgs& a, const TuneArgs& t, const std::vector<std::string>& raw, std::ostream& out) {
  const Manifest manifest = load_manifest(a.manifest);

  TuneConfig cfg;
  cfg.base = loader_config(a);
  cfg.cpus = t.cpus;
  cfg.gpus = t.gpus;
  cfg.max_prefetch = t.max_prefetch;
  cfg.max_workers = t.max_workers;
  cfg.epochs_per_trial = a.epochs;
  cfg.objective = parse_objective(t.objective);
  cfg.drain_per_batch = parse_duration(a.drain);
  cfg.host_budget = parse_budget(a.host_budget);
  cfg.sink_budget = parse_budget(a.sink_budget);
  cfg.reset_cache_between_trials = !t.keep_cache;
  cfg.validate();
  CacheEmulator cache(parse_bytes(a.cache_capacity));

  const fs::path run_dir = resolve_run_dir(a.out, stable_name("tune", raw));
  ensure_dir(run_dir);
  json snapshot = loader_json(cfg.base, a);
  snapshot["cpus"] = cfg.cpus;
  snapshot["gpus"] = cfg.gpus;
  snapshot["max_prefetch"] = cfg.max_prefetch;
  snapshot["max_workers"] = cfg.worker_limit();
  snapshot["objective"] = to_string(cfg.objective);
  snapshot["reset_cache_between_trials"] = cfg.reset_cache_between_trials;
  write_text(run_dir / "config.json", snapshot.dump(2) + "\n");

  std::ofstream log(run_dir / "log.txt", std::ios::trunc);
  std::vector<TrialResult> seen;
  auto observer = [&](const TrialResult& r) {
    log << (r.baseline_only ? "baseline " : "trial ") << r.n_worker << ' ' << r.n_prefetch << ' '
        << to_string(r.status);
    for (const Nanos e : r.epoch_times) log << ' ' << format_seconds(e);
    log << '\n';
    seen.push_back(r);
  };

  TuneOutcome outcome;
  try {
    outcome = dpt_search(cfg, manifest, cache, observer);
  } catch (const NoFeasibleConfigurationError&) {
    log << "no feasible configuration\n";
    throw;
  }
  write_grid_csv(run_dir / kGridFileName, grid_records(outcome));
  write_outcome_json(run_dir / kOutcomeFileName, outcome);

  out << "attempted=" << outcome.trials.size() << " pruned=" << outcome.pruned.size()
      << " run_dir=" << run_dir.string() << '\n';
  if (outcome.baseline.status == TrialStatus::Ok) {
    const Nanos base = objective_value(outcome.baseline, cfg.objective);
    out << "baseline nWorker=" << kBaselineCell.n_worker << " nPrefetch=" << kBaselineCell.n_prefetch
        << " time=" << format_seconds(base) << "s";
    if (outcome.optimal_time > Nanos::zero()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", speedup(outcome.optimal_time, base));
      out << " speedup=" << buf << "x";
    }
    out << '\n';
  }
  out << "nWorker=" << outcome.n_worker << " nPrefetch=" << outcome.n_prefetch
      << " optimal_time=" << format_seconds(outcome.optimal_time) << "s\n";
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path run(a.run);
  if (!fs::is_directory(run)) throw UsageError("run directory '" + a.run + "' does not exist");

  const std::vector<GridRecord> grid = read_grid_csv(run / kGridFileName);

  std::optional<std::size_t> batch = a.batch;
  if (!batch && fs::exists(run / "config.json")) {
    std::ifstream in(run / "config.json");
    try {
      batch = json::parse(in).value("batch_size", std::size_t{0});
    } catch (const json::exception& e) {
      throw IntegrityError("malformed config.json: " + std::string(e.what()));
    }
  }

  std::optional<BaselineTimes> baseline;
  if (!a.baseline_run.empty()) {
    const fs::path other(a.baseline_run);
    if (!fs::is_directory(other)) throw UsageError("baseline run '" + a.baseline_run + "' does not exist");
    baseline = baseline_from_grid(read_grid_csv(other / kGridFileName));
  } else if (fs::exists(run / kOutcomeFileName)) {
    const TuneOutcome outcome = read_outcome_json(run / kOutcomeFileName);
    if (outcome.baseline.status == TrialStatus::Ok) baseline = baseline_from_trial(outcome.baseline);
  } else {
    for (const auto& g : grid) {
      if (Cell{g.n_worker, g.n_prefetch} == kBaselineCell) {
        baseline = baseline_from_grid(grid);
        break;
      }
    }
  }

  const Normalization normalized = normalize_by_prefetch(grid);
  for (const auto& w : normalized.warnings) err << "warning: " << w << '\n';
  write_normalized_csv(run / kNormalizedFileName, normalized);

  const auto rows = summarize(grid, baseline, batch.value_or(0), a.variant);
  write_summary_csv(run / kSummaryFileName, rows);
  print_summary(out, rows);
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Io:
    case ErrorKind::Integrity: return kExitIo;
    case ErrorKind::SinkOverflow:
    case ErrorKind::HostOverflow: return kExitOverflow;
    case ErrorKind::NoFeasibleConfiguration: return kExitInfeasible;
  }
  return kExitIo;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dpt: parallel prefetching dataloader benchmark and (workers, prefetch) tuner", "dpt"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset and its manifest");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--items", gen.items, "Number of items")->required()->check(CLI::PositiveNumber);
  auto* bytes_opt = gen_cmd->add_option("--item-bytes", gen.item_bytes, "Bytes per item");
  auto* res_opt = gen_cmd->add_option("--resolution", gen.resolution, "Square RGB resolution (3*r*r bytes)")
                      ->check(CLI::PositiveNumber);
  bytes_opt->excludes(res_opt);
  gen_cmd->add_option("--labels", gen.labels, "Number of classes")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Payload seed")->capture_default_str();

  LoadArgs bench_load;
  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Measure transfer time for one (workers, prefetch) setting");
  add_load_flags(*bench_cmd, bench_load);
  bench_cmd->add_option("--workers", bench.workers, "Worker count")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--prefetch", bench.prefetch, "Prefetch factor")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--sinks", bench.sinks, "Consumer count")->check(CLI::PositiveNumber)->capture_default_str();

  LoadArgs tune_load;
  TuneArgs tune;
  auto* tune_cmd = app.add_subcommand("tune", "Grid-search workers and prefetch factor");
  add_load_flags(*tune_cmd, tune_load);
  tune_cmd->add_option("--cpus", tune.cpus, "Available CPU cores (N)")->required()->check(CLI::PositiveNumber);
  tune_cmd->add_option("--gpus", tune.gpus, "Consumers (G)")->check(CLI::PositiveNumber)->capture_default_str();
  tune_cmd->add_option("--max-prefetch", tune.max_prefetch, "Largest prefetch factor (P)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tune_cmd->add_option("--max-workers", tune.max_workers, "Worker bound (default N)")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--objective", tune.objective, "total | first_epoch | steady_state")
      ->check(CLI::IsMember({"total", "first_epoch", "steady_state"}))
      ->capture_default_str();
  tune_cmd->add_flag("--keep-cache", tune.keep_cache, "Do not reset the cache between trials");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Normalize a grid and summarize gain and speedup");
  report_cmd->add_option("--run", report.run, "Run directory containing grid.csv")->required();
  report_cmd->add_option("--baseline-run", report.baseline_run, "Run directory holding the baseline measurement");
  report_cmd->add_option("--batch", report.batch, "Batch size label (default from config.json)");
  report_cmd->add_option("--variant", report.variant, "Variant label, e.g. a resolution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  std::vector<std::string> raw;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    raw.push_back(arg);
  }

  try {
    if (*gen_cmd) {
      if (!gen.item_bytes && !gen.resolution) throw UsageError("gen needs --item-bytes or --resolution");
      return cmd_gen(gen, out);
    }
    if (*bench_cmd) return cmd_bench(bench_load, bench, raw, out);
    if (*tune_cmd) return cmd_tune(tune_load, tune, raw, out);
    if (*report_cmd) return cmd_report(report, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace dpt::cli
