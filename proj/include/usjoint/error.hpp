#pragma once

#include <stdexcept>
#include <string>

namespace usjoint {

/// Failure categories. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  invalid_argument = 1,
  dimension_mismatch,
  io,
  bad_magic,
  version_mismatch,
  truncated,
  structure,
  not_found,
  numerical,
  diverged,
  unresolved,
  config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace usjoint
