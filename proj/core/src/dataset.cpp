#include "dpt/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>
#include <unordered_set>

#include <json.hpp>

#include "dpt/errors.hpp"
#include "dpt/random.hpp"

namespace dpt {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t Manifest::max_item_bytes() const noexcept {
  std::uint64_t m = 0;
  for (const auto& item : items) m = std::max(m, item.byte_size);
  return m;
}

void Manifest::validate() const {
  std::uint64_t total = 0;
  std::unordered_set<std::string> paths;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    if (item.id != i) {
      throw IntegrityError("manifest ids not dense: position " + std::to_string(i) + " has id " +
                           std::to_string(item.id));
    }
    if (item.byte_size == 0) throw IntegrityError("item " + std::to_string(i) + " has zero byte_size");
    if (!paths.insert(item.path).second) throw IntegrityError("duplicate item path '" + item.path + "'");
    total += item.byte_size;
  }
  if (total != total_bytes) {
    throw IntegrityError("manifest total_bytes " + std::to_string(total_bytes) + " != sum of items " +
                         std::to_string(total));
  }
}

Manifest make_manifest(fs::path root, std::vector<ItemRecord> items, std::string fingerprint) {
  Manifest m;
  m.root = std::move(root);
  m.items = std::move(items);
  m.spec_fingerprint = std::move(fingerprint);
  for (const auto& item : m.items) m.total_bytes += item.byte_size;
  m.validate();
  return m;
}

std::string fingerprint(const DatasetSpec& spec) {
  std::ostringstream canon;
  canon << "dpt-dataset-v1;count=" << spec.item_count << ";bytes=" << spec.item_bytes
        << ";labels=" << spec.label_count << ";seed=" << spec.seed;
  // FNV-1a, 64 bit
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canon.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Bytes item_payload(std::uint64_t seed, std::uint64_t id, std::uint64_t byte_size) {
  std::mt19937_64 engine(mix_seed(seed, id));
  Bytes out(byte_size);
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = engine();
    for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
      out[i] = static_cast<std::uint8_t>(word & 0xFF);
      word >>= 8;
    }
  }
  return out;
}

namespace {

std::string item_relative_path(std::uint64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "items/%08llu.bin", static_cast<unsigned long long>(id));
  return buf;
}

void write_file(const fs::path& file, const Bytes& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + file.string() + "'");
}

}  // namespace

Manifest generate_dataset(const fs::path& out_dir, const DatasetSpec& spec) {
  if (spec.item_count == 0) throw UsageError("item_count must be > 0");
  if (spec.item_bytes == 0) throw UsageError("item_bytes must be > 0");
  if (spec.label_count == 0) throw UsageError("label_count must be > 0");

  std::error_code ec;
  fs::create_directories(out_dir / "items", ec);
  if (ec) throw IoError("cannot create '" + (out_dir / "items").string() + "': " + ec.message());

  std::vector<ItemRecord> items;
  items.reserve(spec.item_count);
  for (std::uint64_t id = 0; id < spec.item_count; ++id) {
    ItemRecord rec{id, spec.item_bytes, item_relative_path(id),
                   static_cast<std::uint32_t>(id % spec.label_count)};
    write_file(out_dir / rec.path, item_payload(spec.seed, id, spec.item_bytes));
    items.push_back(std::move(rec));
  }
  Manifest m = make_manifest(out_dir, std::move(items), fingerprint(spec));
  write_manifest(m, out_dir / kManifestFileName);
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  out << json{{"item_count", manifest.item_count()},
              {"total_bytes", manifest.total_bytes},
              {"spec_fingerprint", manifest.spec_fingerprint}}
             .dump()
      << '\n';
  for (const auto& item : manifest.items) {
    out << json{{"id", item.id}, {"bytes", item.byte_size}, {"path", item.path}, {"label", item.label}}.dump()
        << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + file.string() + "'");
}

Manifest load_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kManifestFileName : path;
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest '" + file.string() + "'");

  Manifest m;
  m.root = file.parent_path();
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t declared_count = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (line_no == 1) {
        declared_count = j.at("item_count").get<std::uint64_t>();
        m.total_bytes = j.at("total_bytes").get<std::uint64_t>();
        m.spec_fingerprint = j.at("spec_fingerprint").get<std::string>();
        m.items.reserve(declared_count);
        continue;
      }
      m.items.push_back(ItemRecord{j.at("id").get<std::uint64_t>(), j.at("bytes").get<std::uint64_t>(),
                                   j.at("path").get<std::string>(), j.at("label").get<std::uint32_t>()});
    }
  } catch (const json::exception& e) {
    throw IntegrityError("manifest '" + file.string() + "' line " + std::to_string(line_no) + ": " + e.what());
  }
  if (line_no == 0) throw IntegrityError("manifest '" + file.string() + "' is empty");
  if (declared_count != m.items.size()) {
    throw IntegrityError("manifest '" + file.string() + "' declares " + std::to_string(declared_count) +
                         " items but lists " + std::to_string(m.items.size()));
  }
  m.validate();
  return m;
}

void LatencyModel::validate() const {
  if (miss_seek < Nanos::zero() || hit_seek < Nanos::zero() || miss_per_byte.picos_per_byte < 0 ||
      hit_per_byte.picos_per_byte < 0) {
    throw UsageError("latency parameters must be non-negative");
  }
  if (hit_seek > miss_seek || hit_per_byte > miss_per_byte) {
    throw UsageError("cache-hit latency must not exceed cache-miss latency");
  }
}

Nanos LatencyModel::cost(bool hit, std::uint64_t byte_size) const {
  return hit ? hit_seek + hit_per_byte.for_bytes(byte_size) : miss_seek + miss_per_byte.for_bytes(byte_size);
}

CacheEmulator::CacheEmulator(std::uint64_t capacity_bytes) : capacity_(capacity_bytes) {}

bool CacheEmulator::access(std::uint64_t id, std::uint64_t byte_size) {
  std::lock_guard lock(mutex_);
  if (auto it = index_.find(id); it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    ++hits_;
    return true;
  }
  ++misses_;
  if (byte_size > capacity_) return false;
  while (resident_bytes_ + byte_size > capacity_) {
    const Entry& victim = lru_.back();
    resident_bytes_ -= victim.bytes;
    index_.erase(victim.id);
    lru_.pop_back();
  }
  lru_.push_front(Entry{id, byte_size});
  index_.emplace(id, lru_.begin());
  resident_bytes_ += byte_size;
  return false;
}

void CacheEmulator::reset() {
  std::lock_guard lock(mutex_);
  lru_.clear();
  index_.clear();
  resident_bytes_ = 0;
  hits_ = 0;
  misses_ = 0;
}

std::uint64_t CacheEmulator::resident_bytes() const {
  std::lock_guard lock(mutex_);
  return resident_bytes_;
}

std::size_t CacheEmulator::resident_count() const {
  std::lock_guard lock(mutex_);
  return lru_.size();
}

bool CacheEmulator::contains(std::uint64_t id) const {
  std::lock_guard lock(mutex_);
  return index_.contains(id);
}

std::uint64_t CacheEmulator::hit_count() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::uint64_t CacheEmulator::miss_count() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

ItemRead read_item(const Manifest& manifest, std::uint64_t id, CacheEmulator& cache, const LatencyModel& latency) {
  if (id >= manifest.item_count()) {
    throw UsageError("item id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(manifest.item_count()) + ")");
  }
  const ItemRecord& rec = manifest.items[id];
  const fs::path file = manifest.root / rec.path;

  std::error_code ec;
  const auto on_disk = fs::file_size(file, ec);
  if (ec) throw IntegrityError("item " + std::to_string(id) + " missing: '" + file.string() + "'");
  if (on_disk != rec.byte_size) {
    throw IntegrityError("item " + std::to_string(id) + " size mismatch: '" + file.string() + "' has " +
                         std::to_string(on_disk) + " bytes, manifest says " + std::to_string(rec.byte_size));
  }

  ItemRead result;
  result.bytes.resize(rec.byte_size);
  std::ifstream in(file, std::ios::binary);
  in.read(reinterpret_cast<char*>(result.bytes.data()), static_cast<std::streamsize>(rec.byte_size));
  if (!in || in.gcount() != static_cast<std::streamsize>(rec.byte_size)) {
    throw IntegrityError("short read on item " + std::to_string(id) + ": '" + file.string() + "'");
  }

  result.hit = cache.access(id, rec.byte_size);
  result.elapsed = latency.cost(result.hit, rec.byte_size);
  return result;
}

}  // namespace dpt
