#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dpt/dataset.hpp"
#include "dpt/random.hpp"
#include "dpt/units.hpp"

namespace dpt {

using IdList = std::vector<std::uint64_t>;

/// Identity when !shuffle, otherwise a seeded Fisher-Yates permutation.
/// Bit-identical across platforms (no std::uniform_int_distribution).
[[nodiscard]] IdList make_permutation(std::uint64_t item_count, std::uint64_t seed, bool shuffle);

/// Consecutive chunks of batch_size. Throws UsageError when batch_size < 1.
[[nodiscard]] std::vector<IdList> partition_batches(std::span<const std::uint64_t> permutation,
                                                    std::size_t batch_size, bool drop_last);

struct EpochPlan {
  IdList permutation;
  std::vector<IdList> batches;
  std::size_t batch_size = 1;
  bool drop_last = false;

  friend bool operator==(const EpochPlan&, const EpochPlan&) = default;
};

/// The epoch's shuffle seed is mix_seed(seed, epoch_index), so every epoch reshuffles.
[[nodiscard]] EpochPlan make_epoch_plan(std::uint64_t item_count, std::uint64_t seed,
                                        std::uint64_t epoch_index, std::size_t batch_size,
                                        bool shuffle, bool drop_last);

struct TransformCost {
  Nanos per_item{0};
  PerByteCost per_byte{};

  void validate() const;
  [[nodiscard]] Nanos cost(std::uint64_t byte_size) const;
};

struct Sample {
  std::uint64_t id = 0;
  Bytes bytes;
  Nanos elapsed{0};  // read + transform
};

struct Transformed {
  Bytes bytes;
  Nanos elapsed{0};
};

/// Pass-through transform that only charges cost. The caller does any realtime waiting.
[[nodiscard]] Transformed transform_item(Bytes raw, const TransformCost& cost);

struct Batch {
  std::uint64_t seq = 0;
  IdList item_ids;
  Bytes payload;
  Nanos produce_elapsed{0};
};

/// Concatenates samples in order. Throws UsageError on empty input.
[[nodiscard]] Batch collate(std::vector<Sample> samples, std::uint64_t seq);

}  // namespace dpt
