#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace dpt {

/// All modeled time is kept in whole nanoseconds so virtual-mode schedules are exact.
using Nanos = std::chrono::nanoseconds;

/// Per-byte cost expressed in picoseconds per byte.
///
/// Storage and memory bandwidths are routinely below one nanosecond per byte,
/// so the rate is stored one decade finer than Nanos. The charged duration is
/// rounded to the nearest nanosecond.
struct PerByteCost {
  std::int64_t picos_per_byte = 0;

  static constexpr PerByteCost from_nanos(std::int64_t ns_per_byte) { return {ns_per_byte * 1000}; }

  [[nodiscard]] Nanos for_bytes(std::uint64_t bytes) const;

  friend constexpr bool operator==(PerByteCost, PerByteCost) = default;
  friend constexpr auto operator<=>(PerByteCost, PerByteCost) = default;
};

[[nodiscard]] double to_seconds(Nanos d);

/// Parses "250ns", "1.5ms", "2us", "0.25s", "3ps". A bare number is seconds.
/// Throws UsageError on malformed input or negative values.
[[nodiscard]] std::int64_t parse_picos(std::string_view text);
[[nodiscard]] Nanos parse_duration(std::string_view text);
[[nodiscard]] PerByteCost parse_per_byte(std::string_view text);

/// Parses "4096", "512B", "64KiB", "1.5GiB" (powers of 1024).
[[nodiscard]] std::uint64_t parse_bytes(std::string_view text);

/// Fixed nine-decimal seconds, e.g. 1500000 ns -> "0.001500000".
[[nodiscard]] std::string format_seconds(Nanos d);
/// Digit-exact inverse of format_seconds (no floating point involved).
[[nodiscard]] Nanos parse_seconds_exact(std::string_view text);

/// a * b, clamped to UINT64_MAX instead of wrapping.
[[nodiscard]] std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b);
[[nodiscard]] std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b);

}  // namespace dpt
