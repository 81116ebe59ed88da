#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpt/tuner.hpp"
#include "dpt/units.hpp"

namespace dpt {

/// One row of grid.csv: a (cell, epoch) measurement.
struct GridRecord {
  std::size_t n_worker = 0;
  std::size_t n_prefetch = 0;
  std::size_t epoch_index = 0;
  Nanos transfer_time{0};
  TrialStatus status = TrialStatus::Ok;

  friend bool operator==(const GridRecord&, const GridRecord&) = default;
};

/// Overflowing trials produce a single epoch-0 row with zero time.
[[nodiscard]] std::vector<GridRecord> grid_records(std::span<const TrialResult> trials);
[[nodiscard]] std::vector<GridRecord> grid_records(const TuneOutcome& outcome);

struct NormalizedRecord {
  std::size_t n_worker = 0;
  std::size_t n_prefetch = 0;
  std::size_t epoch_index = 0;
  double value = 0.0;

  friend bool operator==(const NormalizedRecord&, const NormalizedRecord&) = default;
};

struct Normalization {
  std::vector<NormalizedRecord> records;
  std::vector<std::string> warnings;
};

/// Divides every ok time by the largest time sharing its (n_prefetch, epoch).
/// Groups without any ok record are reported in `warnings`.
[[nodiscard]] Normalization normalize_by_prefetch(std::span<const GridRecord> grid);
[[nodiscard]] Normalization normalize_by_prefetch(std::span<const NormalizedRecord> records);

/// 100 * (optimal - baseline) / baseline; negative means the tuned cell is faster.
[[nodiscard]] double time_gain(double optimal_time, double baseline_time);
[[nodiscard]] double time_gain(Nanos optimal_time, Nanos baseline_time);
/// baseline / optimal.
[[nodiscard]] double speedup(double optimal_time, double baseline_time);
[[nodiscard]] double speedup(Nanos optimal_time, Nanos baseline_time);

enum class EpochClass { First, After2nd };
[[nodiscard]] std::string_view to_string(EpochClass c);

struct SummaryRow {
  std::size_t batch_size = 0;
  std::string variant;
  EpochClass epoch_class = EpochClass::First;
  std::size_t optimal_workers = 0;
  std::size_t optimal_prefetch = 0;
  Nanos transfer_time{0};
  std::optional<Nanos> baseline_time;
  std::optional<double> gain_percent;
  std::optional<double> speedup;
};

/// Per-epoch times of the comparison configuration.
struct BaselineTimes {
  std::vector<Nanos> epoch_times;
};

[[nodiscard]] BaselineTimes baseline_from_trial(const TrialResult& trial);
/// Picks kBaselineCell from a grid, else the first ok cell. Empty when nothing is ok.
[[nodiscard]] std::optional<BaselineTimes> baseline_from_grid(std::span<const GridRecord> grid);

/// First-epoch and after-2nd-epoch optima of the grid (the latter only when cells
/// have at least two epochs), each compared with the baseline when given.
[[nodiscard]] std::vector<SummaryRow> summarize(std::span<const GridRecord> grid,
                                                const std::optional<BaselineTimes>& baseline,
                                                std::size_t batch_size, const std::string& variant);

void write_grid_csv(std::ostream& out, std::span<const GridRecord> grid);
void write_grid_csv(const std::filesystem::path& file, std::span<const GridRecord> grid);
/// Throws IntegrityError naming the offending line on malformed input.
[[nodiscard]] std::vector<GridRecord> read_grid_csv(std::istream& in);
[[nodiscard]] std::vector<GridRecord> read_grid_csv(const std::filesystem::path& file);

void write_normalized_csv(const std::filesystem::path& file, const Normalization& normalized);
void write_summary_csv(const std::filesystem::path& file, std::span<const SummaryRow> rows);
/// Two-decimal human table.
void print_summary(std::ostream& out, std::span<const SummaryRow> rows);

[[nodiscard]] std::string outcome_to_json(const TuneOutcome& outcome, int indent = 2);
[[nodiscard]] TuneOutcome outcome_from_json(const std::string& text);
void write_outcome_json(const std::filesystem::path& file, const TuneOutcome& outcome);
[[nodiscard]] TuneOutcome read_outcome_json(const std::filesystem::path& file);

inline constexpr const char* kGridFileName = "grid.csv";
inline constexpr const char* kOutcomeFileName = "outcome.json";
inline constexpr const char* kNormalizedFileName = "normalized.csv";
inline constexpr const char* kSummaryFileName = "summary.csv";

}  // namespace dpt
