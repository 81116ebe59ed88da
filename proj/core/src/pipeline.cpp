#include "dpt/pipeline.hpp"

#include <numeric>
#include <random>

#include "dpt/errors.hpp"

namespace dpt {

IdList make_permutation(std::uint64_t item_count, std::uint64_t seed, bool shuffle) {
  IdList ids(item_count);
  std::iota(ids.begin(), ids.end(), std::uint64_t{0});
  if (!shuffle || item_count < 2) return ids;
  std::mt19937_64 engine(seed);
  for (std::uint64_t i = item_count - 1; i > 0; --i) {
    const std::uint64_t j = uniform_below(engine, i + 1);
    std::swap(ids[i], ids[j]);
  }
  return ids;
}

std::vector<IdList> partition_batches(std::span<const std::uint64_t> permutation, std::size_t batch_size,
                                      bool drop_last) {
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  std::vector<IdList> batches;
  batches.reserve(permutation.size() / batch_size + 1);
  for (std::size_t begin = 0; begin < permutation.size(); begin += batch_size) {
    const std::size_t end = std::min(permutation.size(), begin + batch_size);
    if (drop_last && end - begin < batch_size) break;
    batches.emplace_back(permutation.begin() + static_cast<std::ptrdiff_t>(begin),
                         permutation.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

EpochPlan make_epoch_plan(std::uint64_t item_count, std::uint64_t seed, std::uint64_t epoch_index,
                          std::size_t batch_size, bool shuffle, bool drop_last) {
  EpochPlan plan;
  plan.permutation = make_permutation(item_count, mix_seed(seed, epoch_index), shuffle);
  plan.batches = partition_batches(plan.permutation, batch_size, drop_last);
  plan.batch_size = batch_size;
  plan.drop_last = drop_last;
  return plan;
}

void TransformCost::validate() const {
  if (per_item < Nanos::zero() || per_byte.picos_per_byte < 0) {
    throw UsageError("transform costs must be non-negative");
  }
}

Nanos TransformCost::cost(std::uint64_t byte_size) const { return per_item + per_byte.for_bytes(byte_size); }

Transformed transform_item(Bytes raw, const TransformCost& cost) {
  const Nanos elapsed = cost.cost(raw.size());
  return Transformed{std::move(raw), elapsed};
}

Batch collate(std::vector<Sample> samples, std::uint64_t seq) {
  if (samples.empty()) throw UsageError("collate needs at least one sample");
  Batch batch;
  batch.seq = seq;
  std::size_t total = 0;
  for (const auto& s : samples) total += s.bytes.size();
  batch.payload.reserve(total);
  batch.item_ids.reserve(samples.size());
  for (auto& s : samples) {
    batch.item_ids.push_back(s.id);
    batch.payload.insert(batch.payload.end(), s.bytes.begin(), s.bytes.end());
    batch.produce_elapsed += s.elapsed;
  }
  return batch;
}

}  // namespace dpt
