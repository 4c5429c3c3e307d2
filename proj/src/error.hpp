#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace adaptrace {

enum class errc {
  invalid_argument,
  incomplete,
  parse,
  io,
  internal,
};

/// Library failure. code() selects the coarse category that the C interface
/// and the command line map onto status and exit codes; the message names the
/// offending input so callers can act on it.
class Error : public std::runtime_error {
 public:
  Error(errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace adaptrace
