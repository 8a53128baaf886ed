#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hcf {

using BusId = std::int64_t;
using LineId = std::int64_t;

// Error categories mirror the CLI exit codes and the C API status values.
enum class ErrorCode : int {
  usage = 1,    // bad arguments / misuse of an interface
  data = 2,     // malformed or inconsistent input data
  numeric = 3,  // numerical failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorCode::usage, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorCode::data, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorCode::numeric, msg);
}

}  // namespace hcf
