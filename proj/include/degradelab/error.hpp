#pragma once

#include <stdexcept>
#include <string>

namespace degradelab {

enum class ErrorKind { InvalidArgument, Io, Config, Numeric, Runtime };

// All library failures are reported through this exception type. The kind
// drives the status code returned across the C boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorKind::InvalidArgument, what);
}
[[noreturn]] inline void throw_io(const std::string& what) {
  throw Error(ErrorKind::Io, what);
}
[[noreturn]] inline void throw_config(const std::string& what) {
  throw Error(ErrorKind::Config, what);
}
[[noreturn]] inline void throw_numeric(const std::string& what) {
  throw Error(ErrorKind::Numeric, what);
}

}  // namespace degradelab
