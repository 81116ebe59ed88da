#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpt {

enum class ErrorKind {
  Usage,
  Io,
  Integrity,
  SinkOverflow,
  HostOverflow,
  NoFeasibleConfiguration,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ErrorKind::Integrity, what) {}
};

/// A collated batch does not fit the consumer's memory budget.
class SinkOverflowError : public Error {
 public:
  explicit SinkOverflowError(const std::string& what) : Error(ErrorKind::SinkOverflow, what) {}
};

class HostOverflowError : public Error {
 public:
  explicit HostOverflowError(const std::string& what) : Error(ErrorKind::HostOverflow, what) {}
};

class NoFeasibleConfigurationError : public Error {
 public:
  explicit NoFeasibleConfigurationError(const std::string& what)
      : Error(ErrorKind::NoFeasibleConfiguration, what) {}
};

/// Rethrows `e` as the same concrete error type with `context` prepended.
[[noreturn]] void rethrow_with_context(const Error& e, std::string_view context);

}  // namespace dpt
