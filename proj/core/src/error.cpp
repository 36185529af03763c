#include "edm/error.hpp"

namespace edm {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape: return "shape error";
    case ErrorKind::data: return "data error";
    case ErrorKind::format: return "format error";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::corruption: return "corruption error";
    case ErrorKind::io: return "io error";
    case ErrorKind::state: return "state error";
    case ErrorKind::numeric: return "numeric error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

void throw_error(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace edm
