#pragma once

#include <stdexcept>
#include <string>

namespace edm {

enum class ErrorKind {
  shape,
  data,
  format,
  unsupported,
  corruption,
  io,
  state,
  numeric,
};

const char* to_string(ErrorKind kind) noexcept;

// All library failures are reported through this single exception type; the
// kind decides how callers (the CLI in particular) classify them.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void throw_error(ErrorKind kind, const std::string& message);

}  // namespace edm
