#include "dpt/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dpt/errors.hpp"

namespace dpt {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<GridRecord> grid_records(std::span<const TrialResult> trials) {
  std::vector<GridRecord> out;
  for (const auto& t : trials) {
    if (t.status != TrialStatus::Ok) {
      out.push_back({t.n_worker, t.n_prefetch, 0, Nanos::zero(), t.status});
      continue;
    }
    for (std::size_t e = 0; e < t.epoch_times.size(); ++e) {
      out.push_back({t.n_worker, t.n_prefetch, e, t.epoch_times[e], t.status});
    }
  }
  return out;
}

std::vector<GridRecord> grid_records(const TuneOutcome& outcome) { return grid_records(outcome.trials); }

namespace {

struct Keyed {
  std::size_t n_worker;
  std::size_t n_prefetch;
  std::size_t epoch_index;
  double value;
  bool ok;
};

Normalization normalize_keyed(const std::vector<Keyed>& rows) {
  using GroupKey = std::pair<std::size_t, std::size_t>;  // (n_prefetch, epoch)
  std::map<GroupKey, double> group_max;
  std::map<GroupKey, bool> group_seen;
  for (const auto& r : rows) {
    const GroupKey key{r.n_prefetch, r.epoch_index};
    group_seen[key] = true;
    if (!r.ok) continue;
    auto [it, inserted] = group_max.try_emplace(key, r.value);
    if (!inserted) it->second = std::max(it->second, r.value);
  }

  Normalization out;
  for (const auto& [key, seen] : group_seen) {
    if (!group_max.contains(key)) {
      out.warnings.push_back("prefetch " + std::to_string(key.first) + " epoch " + std::to_string(key.second) +
                             ": no ok records, group skipped");
    }
  }
  for (const auto& r : rows) {
    if (!r.ok) continue;
    const double max = group_max.at({r.n_prefetch, r.epoch_index});
    // Every member of a group shares its max; a zero max means the whole group is zero.
    const double v = max > 0.0 ? r.value / max : 1.0;
    out.records.push_back({r.n_worker, r.n_prefetch, r.epoch_index, v});
  }
  return out;
}

}  // namespace

Normalization normalize_by_prefetch(std::span<const GridRecord> grid) {
  std::vector<Keyed> rows;
  rows.reserve(grid.size());
  for (const auto& g : grid) {
    rows.push_back({g.n_worker, g.n_prefetch, g.epoch_index, static_cast<double>(g.transfer_time.count()),
                    g.status == TrialStatus::Ok});
  }
  return normalize_keyed(rows);
}

Normalization normalize_by_prefetch(std::span<const NormalizedRecord> records) {
  std::vector<Keyed> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back({r.n_worker, r.n_prefetch, r.epoch_index, r.value, true});
  return normalize_keyed(rows);
}

double time_gain(double optimal_time, double baseline_time) {
  if (!(baseline_time > 0.0)) throw UsageError("time_gain needs a positive baseline time");
  return 100.0 * (optimal_time - baseline_time) / baseline_time;
}

double time_gain(Nanos optimal_time, Nanos baseline_time) {
  return time_gain(static_cast<double>(optimal_time.count()), static_cast<double>(baseline_time.count()));
}

double speedup(double optimal_time, double baseline_time) {
  if (!(optimal_time > 0.0) || !(baseline_time > 0.0)) throw UsageError("speedup needs positive times");
  return baseline_time / optimal_time;
}

double speedup(Nanos optimal_time, Nanos baseline_time) {
  return speedup(static_cast<double>(optimal_time.count()), static_cast<double>(baseline_time.count()));
}

std::string_view to_string(EpochClass c) { return c == EpochClass::First ? "first" : "after_2nd"; }

namespace {

struct CellTimes {
  Cell cell;
  std::map<std::size_t, Nanos> epochs;
  bool ok = true;
};

std::vector<CellTimes> group_cells(std::span<const GridRecord> grid) {
  std::vector<CellTimes> cells;
  std::map<Cell, std::size_t> index;
  for (const auto& g : grid) {
    const Cell c{g.n_worker, g.n_prefetch};
    auto [it, inserted] = index.try_emplace(c, cells.size());
    if (inserted) cells.push_back({c, {}, true});
    CellTimes& ct = cells[it->second];
    if (g.status != TrialStatus::Ok) {
      ct.ok = false;
      continue;
    }
    ct.epochs[g.epoch_index] = g.transfer_time;
  }
  return cells;
}

std::optional<Nanos> class_time(const std::vector<Nanos>& epochs, EpochClass c) {
  if (c == EpochClass::First) {
    if (epochs.empty()) return std::nullopt;
    return epochs.front();
  }
  if (epochs.size() < 2) return std::nullopt;
  Nanos sum{0};
  for (std::size_t e = 1; e < epochs.size(); ++e) sum += epochs[e];
  return sum / static_cast<std::int64_t>(epochs.size() - 1);
}

std::vector<Nanos> ordered(const std::map<std::size_t, Nanos>& epochs) {
  std::vector<Nanos> out;
  for (const auto& [e, t] : epochs) out.push_back(t);
  return out;
}

}  // namespace

BaselineTimes baseline_from_trial(const TrialResult& trial) { return BaselineTimes{trial.epoch_times}; }

std::optional<BaselineTimes> baseline_from_grid(std::span<const GridRecord> grid) {
  const auto cells = group_cells(grid);
  const CellTimes* pick = nullptr;
  for (const auto& c : cells) {
    if (!c.ok || c.epochs.empty()) continue;
    if (c.cell == kBaselineCell) {
      pick = &c;
      break;
    }
    if (!pick) pick = &c;
  }
  if (!pick) return std::nullopt;
  return BaselineTimes{ordered(pick->epochs)};
}

std::vector<SummaryRow> summarize(std::span<const GridRecord> grid, const std::optional<BaselineTimes>& baseline,
                                  std::size_t batch_size, const std::string& variant) {
  const auto cells = group_cells(grid);
  std::vector<SummaryRow> rows;
  for (const EpochClass cls : {EpochClass::First, EpochClass::After2nd}) {
    const CellTimes* best = nullptr;
    Nanos best_time{0};
    for (const auto& c : cells) {
      if (!c.ok) continue;
      const auto t = class_time(ordered(c.epochs), cls);
      if (!t) continue;
      if (!best || *t < best_time) {
        best = &c;
        best_time = *t;
      }
    }
    if (!best) continue;
    SummaryRow row;
    row.batch_size = batch_size;
    row.variant = variant;
    row.epoch_class = cls;
    row.optimal_workers = best->cell.n_worker;
    row.optimal_prefetch = best->cell.n_prefetch;
    row.transfer_time = best_time;
    if (baseline) {
      if (const auto b = class_time(baseline->epoch_times, cls); b && *b > Nanos::zero()) {
        row.baseline_time = *b;
        row.gain_percent = time_gain(best_time, *b);
        if (best_time > Nanos::zero()) row.speedup = speedup(best_time, *b);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

constexpr std::string_view kGridHeader = "n_worker,n_prefetch,epoch,transfer_time_s,status";

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& file) {
  out.flush();
  if (!out) throw IoError("write failed for '" + file.string() + "'");
}

std::size_t parse_index(std::string_view field, std::size_t line_no, std::string_view name) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw IntegrityError("grid.csv line " + std::to_string(line_no) + ": bad " + std::string(name) + " '" +
                         std::string(field) + "'");
  }
  return v;
}

}  // namespace

void write_grid_csv(std::ostream& out, std::span<const GridRecord> grid) {
  out << kGridHeader << '\n';
  for (const auto& g : grid) {
    out << g.n_worker << ',' << g.n_prefetch << ',' << g.epoch_index << ',' << format_seconds(g.transfer_time)
        << ',' << to_string(g.status) << '\n';
  }
}

void write_grid_csv(const fs::path& file, std::span<const GridRecord> grid) {
  auto out = open_out(file);
  write_grid_csv(out, grid);
  finish(out, file);
}

std::vector<GridRecord> read_grid_csv(std::istream& in) {
  std::vector<GridRecord> out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw IntegrityError("grid.csv line 1: missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kGridHeader) throw IntegrityError("grid.csv line 1: unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 5) {
      throw IntegrityError("grid.csv line " + std::to_string(line_no) + ": expected 5 fields, got " +
                           std::to_string(fields.size()));
    }
    GridRecord g;
    g.n_worker = parse_index(fields[0], line_no, "n_worker");
    g.n_prefetch = parse_index(fields[1], line_no, "n_prefetch");
    g.epoch_index = parse_index(fields[2], line_no, "epoch");
    try {
      g.transfer_time = parse_seconds_exact(fields[3]);
      g.status = parse_trial_status(fields[4]);
    } catch (const UsageError& e) {
      throw IntegrityError("grid.csv line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(g);
  }
  return out;
}

std::vector<GridRecord> read_grid_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  return read_grid_csv(in);
}

void write_normalized_csv(const fs::path& file, const Normalization& normalized) {
  auto out = open_out(file);
  out << "n_worker,n_prefetch,epoch,normalized\n";
  char buf[64];
  for (const auto& r : normalized.records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.n_worker << ',' << r.n_prefetch << ',' << r.epoch_index << ',' << buf << '\n';
  }
  finish(out, file);
}

void write_summary_csv(const fs::path& file, std::span<const SummaryRow> rows) {
  auto out = open_out(file);
  out << "batch_size,variant,epoch_class,optimal_workers,optimal_prefetch,transfer_time_s,baseline_time_s,"
         "gain_percent,speedup\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.batch_size << ',' << r.variant << ',' << to_string(r.epoch_class) << ',' << r.optimal_workers << ','
        << r.optimal_prefetch << ',' << format_seconds(r.transfer_time) << ',';
    if (r.baseline_time) out << format_seconds(*r.baseline_time);
    out << ',';
    if (r.gain_percent) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.gain_percent);
      out << buf;
    }
    out << ',';
    if (r.speedup) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.speedup);
      out << buf;
    }
    out << '\n';
  }
  finish(out, file);
}

void print_summary(std::ostream& out, std::span<const SummaryRow> rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %-10s %-10s %8s %9s %12s %12s %9s %8s\n", "batch", "variant", "epoch",
                "workers", "prefetch", "time_s", "baseline_s", "gain_%", "speedup");
  out << line;
  for (const auto& r : rows) {
    char base[32] = "-";
    char gain[32] = "-";
    char sp[32] = "-";
    if (r.baseline_time) std::snprintf(base, sizeof base, "%.2f", to_seconds(*r.baseline_time));
    if (r.gain_percent) std::snprintf(gain, sizeof gain, "%.2f", *r.gain_percent);
    if (r.speedup) std::snprintf(sp, sizeof sp, "%.2fx", *r.speedup);
    std::snprintf(line, sizeof line, "%-6zu %-10s %-10s %8zu %9zu %12.2f %12s %9s %8s\n", r.batch_size,
                  r.variant.empty() ? "-" : r.variant.c_str(), std::string(to_string(r.epoch_class)).c_str(),
                  r.optimal_workers, r.optimal_prefetch, to_seconds(r.transfer_time), base, gain, sp);
    out << line;
  }
}

namespace {

json trial_to_json(const TrialResult& t) {
  json times = json::array();
  for (const Nanos e : t.epoch_times) times.push_back(e.count());
  return json{{"n_worker", t.n_worker},
              {"n_prefetch", t.n_prefetch},
              {"status", to_string(t.status)},
              {"epoch_times_ns", std::move(times)},
              {"total_time_ns", t.total_time.count()},
              {"baseline_only", t.baseline_only}};
}

TrialResult trial_from_json(const json& j) {
  TrialResult t;
  t.n_worker = j.at("n_worker").get<std::size_t>();
  t.n_prefetch = j.at("n_prefetch").get<std::size_t>();
  t.status = parse_trial_status(j.at("status").get<std::string>());
  for (const auto& e : j.at("epoch_times_ns")) t.epoch_times.push_back(Nanos{e.get<std::int64_t>()});
  t.total_time = Nanos{j.at("total_time_ns").get<std::int64_t>()};
  t.baseline_only = j.value("baseline_only", false);
  return t;
}

}  // namespace

std::string outcome_to_json(const TuneOutcome& outcome, int indent) {
  json trials = json::array();
  for (const auto& t : outcome.trials) trials.push_back(trial_to_json(t));
  json pruned = json::array();
  for (const auto& c : outcome.pruned) pruned.push_back({{"n_worker", c.n_worker}, {"n_prefetch", c.n_prefetch}});
  const json j{{"n_worker", outcome.n_worker},
               {"n_prefetch", outcome.n_prefetch},
               {"optimal_time_ns", outcome.optimal_time.count()},
               {"objective", to_string(outcome.objective)},
               {"trials", std::move(trials)},
               {"pruned", std::move(pruned)},
               {"baseline", trial_to_json(outcome.baseline)}};
  return j.dump(indent);
}

TuneOutcome outcome_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    TuneOutcome o;
    o.n_worker = j.at("n_worker").get<std::size_t>();
    o.n_prefetch = j.at("n_prefetch").get<std::size_t>();
    o.optimal_time = Nanos{j.at("optimal_time_ns").get<std::int64_t>()};
    o.objective = parse_objective(j.at("objective").get<std::string>());
    for (const auto& t : j.at("trials")) o.trials.push_back(trial_from_json(t));
    for (const auto& c : j.at("pruned")) {
      o.pruned.push_back({c.at("n_worker").get<std::size_t>(), c.at("n_prefetch").get<std::size_t>()});
    }
    o.baseline = trial_from_json(j.at("baseline"));
    return o;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed outcome JSON: ") + e.what());
  } catch (const UsageError& e) {
    throw IntegrityError(std::string("malformed outcome JSON: ") + e.what());
  }
}

void write_outcome_json(const fs::path& file, const TuneOutcome& outcome) {
  auto out = open_out(file);
  out << outcome_to_json(outcome) << '\n';
  finish(out, file);
}

TuneOutcome read_outcome_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return outcome_from_json(buf.str());
}

}  // namespace dpt
