#include "dpt/errors.hpp"

namespace dpt {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Io: return "io";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::SinkOverflow: return "sink_overflow";
    case ErrorKind::HostOverflow: return "host_overflow";
    case ErrorKind::NoFeasibleConfiguration: return "no_feasible_configuration";
  }
  return "unknown";
}

void rethrow_with_context(const Error& e, std::string_view context) {
  const std::string msg = std::string(context) + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::Usage: throw UsageError(msg);
    case ErrorKind::Io: throw IoError(msg);
    case ErrorKind::Integrity: throw IntegrityError(msg);
    case ErrorKind::SinkOverflow: throw SinkOverflowError(msg);
    case ErrorKind::HostOverflow: throw HostOverflowError(msg);
    case ErrorKind::NoFeasibleConfiguration: throw NoFeasibleConfigurationError(msg);
  }
  throw Error(e.kind(), msg);
}

}  // namespace dpt
