#pragma once

#include <cstdint>
#include <filesystem>
#include <list>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpt/units.hpp"

namespace dpt {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::string_view kManifestFileName = "manifest.jsonl";

struct ItemRecord {
  std::uint64_t id = 0;
  std::uint64_t byte_size = 0;
  std::string path;  // relative to Manifest::root
  std::uint32_t label = 0;

  friend bool operator==(const ItemRecord&, const ItemRecord&) = default;
};

/// On-disk dataset catalog. Immutable once built; safe to share between threads.
struct Manifest {
  std::filesystem::path root;
  std::vector<ItemRecord> items;
  std::uint64_t total_bytes = 0;
  std::string spec_fingerprint;

  [[nodiscard]] std::size_t item_count() const noexcept { return items.size(); }
  [[nodiscard]] std::uint64_t max_item_bytes() const noexcept;

  /// Checks dense ids, positive sizes, unique paths and the byte total.
  void validate() const;
};

/// Builds a manifest from records, filling in total_bytes.
[[nodiscard]] Manifest make_manifest(std::filesystem::path root, std::vector<ItemRecord> items,
                                     std::string fingerprint = {});

struct DatasetSpec {
  std::uint64_t item_count = 0;
  std::uint64_t item_bytes = 0;
  std::uint32_t label_count = 10;
  std::uint64_t seed = 0;
};

/// Bytes per item of a square RGB image of side `resolution`, one byte per channel.
[[nodiscard]] constexpr std::uint64_t resolution_item_bytes(std::uint64_t resolution) {
  return 3 * resolution * resolution;
}

[[nodiscard]] std::string fingerprint(const DatasetSpec& spec);

/// Writes item_count files of item_bytes seeded pseudorandom bytes plus the
/// manifest file into out_dir. Labels are id mod label_count.
Manifest generate_dataset(const std::filesystem::path& out_dir, const DatasetSpec& spec);

/// Deterministic content of one generated item.
[[nodiscard]] Bytes item_payload(std::uint64_t seed, std::uint64_t id, std::uint64_t byte_size);

void write_manifest(const Manifest& manifest, const std::filesystem::path& file);
/// Accepts either the manifest file or the directory containing it.
[[nodiscard]] Manifest load_manifest(const std::filesystem::path& path);

/// Cost of one item read for the cache path taken.
struct LatencyModel {
  Nanos miss_seek{0};
  PerByteCost miss_per_byte{};
  Nanos hit_seek{0};
  PerByteCost hit_per_byte{};

  void validate() const;
  [[nodiscard]] Nanos cost(bool hit, std::uint64_t byte_size) const;
};

/// Byte-budgeted LRU stand-in for the OS page cache.
///
/// Internally synchronized; every access is linearizable. Items larger than
/// the whole capacity are never admitted.
class CacheEmulator {
 public:
  explicit CacheEmulator(std::uint64_t capacity_bytes);

  CacheEmulator(const CacheEmulator&) = delete;
  CacheEmulator& operator=(const CacheEmulator&) = delete;

  /// Records one read of `id`. Returns true on hit. A hit refreshes recency;
  /// a miss admits the item, evicting least-recently-used entries to fit.
  bool access(std::uint64_t id, std::uint64_t byte_size);

  void reset();

  [[nodiscard]] std::uint64_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::uint64_t resident_bytes() const;
  [[nodiscard]] std::size_t resident_count() const;
  [[nodiscard]] bool contains(std::uint64_t id) const;
  [[nodiscard]] std::uint64_t hit_count() const;
  [[nodiscard]] std::uint64_t miss_count() const;

 private:
  struct Entry {
    std::uint64_t id;
    std::uint64_t bytes;
  };

  const std::uint64_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<std::uint64_t, std::list<Entry>::iterator> index_;
  std::uint64_t resident_bytes_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

struct ItemRead {
  Bytes bytes;
  Nanos elapsed{0};
  bool hit = false;
};

/// Reads one item from disk and charges the modeled latency for the cache path taken.
/// Throws UsageError for an unknown id and IntegrityError for a missing or resized file;
/// the cache is not touched in either case.
[[nodiscard]] ItemRead read_item(const Manifest& manifest, std::uint64_t id, CacheEmulator& cache,
                                 const LatencyModel& latency);

inline void reset_cache(CacheEmulator& cache) { cache.reset(); }

}  // namespace dpt
