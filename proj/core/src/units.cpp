#include "dpt/units.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include "dpt/errors.hpp"

namespace dpt {

namespace {

__extension__ typedef __int128 i128;

struct Decimal {
  i128 mantissa = 0;  // digits with the decimal point removed
  int fraction_digits = 0;
  std::string_view suffix;
};

Decimal split_decimal(std::string_view text, std::string_view what) {
  Decimal d;
  std::size_t i = 0;
  bool any_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      any_digit = true;
      if (d.mantissa > (std::numeric_limits<std::int64_t>::max() / 10)) {
        throw UsageError(std::string(what) + " out of range: '" + std::string(text) + "'");
      }
      d.mantissa = d.mantissa * 10 + (c - '0');
      if (seen_point) ++d.fraction_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) {
    throw UsageError("malformed " + std::string(what) + ": '" + std::string(text) + "'");
  }
  d.suffix = text.substr(i);
  while (!d.suffix.empty() && d.suffix.front() == ' ') d.suffix.remove_prefix(1);
  return d;
}

/// mantissa * scale / 10^fraction_digits, rounded half up.
std::int64_t scale_exact(const Decimal& d, i128 scale, std::string_view text, std::string_view what) {
  i128 denom = 1;
  for (int k = 0; k < d.fraction_digits; ++k) denom *= 10;
  const i128 num = d.mantissa * scale;
  const i128 v = (num + denom / 2) / denom;
  if (v > std::numeric_limits<std::int64_t>::max()) {
    throw UsageError(std::string(what) + " out of range: '" + std::string(text) + "'");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

Nanos PerByteCost::for_bytes(std::uint64_t bytes) const {
  const i128 ps = static_cast<i128>(picos_per_byte) * static_cast<i128>(bytes);
  return Nanos{static_cast<std::int64_t>((ps + 500) / 1000)};
}

double to_seconds(Nanos d) { return static_cast<double>(d.count()) / 1e9; }

std::int64_t parse_picos(std::string_view text) {
  if (!text.empty() && text.front() == '-') {
    throw UsageError("duration must be non-negative: '" + std::string(text) + "'");
  }
  const Decimal d = split_decimal(text, "duration");
  static constexpr std::array<std::pair<std::string_view, std::int64_t>, 7> kUnits{{
      {"ps", 1},
      {"ns", 1'000},
      {"us", 1'000'000},
      {"\xC2\xB5s", 1'000'000},
      {"ms", 1'000'000'000},
      {"s", 1'000'000'000'000},
      {"", 1'000'000'000'000},
  }};
  for (const auto& [name, scale] : kUnits) {
    if (d.suffix == name) return scale_exact(d, scale, text, "duration");
  }
  throw UsageError("unknown duration unit in '" + std::string(text) + "'");
}

Nanos parse_duration(std::string_view text) {
  const std::int64_t ps = parse_picos(text);
  return Nanos{(ps + 500) / 1000};
}

PerByteCost parse_per_byte(std::string_view text) { return PerByteCost{parse_picos(text)}; }

std::uint64_t parse_bytes(std::string_view text) {
  if (!text.empty() && text.front() == '-') {
    throw UsageError("byte count must be non-negative: '" + std::string(text) + "'");
  }
  const Decimal d = split_decimal(text, "byte count");
  static constexpr std::array<std::pair<std::string_view, std::int64_t>, 6> kUnits{{
      {"", 1},
      {"B", 1},
      {"KiB", std::int64_t{1} << 10},
      {"MiB", std::int64_t{1} << 20},
      {"GiB", std::int64_t{1} << 30},
      {"TiB", std::int64_t{1} << 40},
  }};
  for (const auto& [name, scale] : kUnits) {
    if (d.suffix == name) return static_cast<std::uint64_t>(scale_exact(d, scale, text, "byte count"));
  }
  throw UsageError("unknown byte unit in '" + std::string(text) + "' (use B, KiB, MiB, GiB, TiB)");
}

std::string format_seconds(Nanos d) {
  std::int64_t ns = d.count();
  const bool negative = ns < 0;
  if (negative) ns = -ns;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%09lld", negative ? "-" : "",
                static_cast<long long>(ns / 1'000'000'000), static_cast<long long>(ns % 1'000'000'000));
  return buf;
}

Nanos parse_seconds_exact(std::string_view text) {
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  const Decimal d = split_decimal(text, "seconds");
  if (!d.suffix.empty() || d.fraction_digits > 9) {
    throw UsageError("malformed seconds value: '" + std::string(text) + "'");
  }
  const std::int64_t ns = scale_exact(d, 1'000'000'000, text, "seconds");
  return Nanos{negative ? -ns : ns};
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) return std::numeric_limits<std::uint64_t>::max();
  return r;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) return std::numeric_limits<std::uint64_t>::max();
  return r;
}

}  // namespace dpt
