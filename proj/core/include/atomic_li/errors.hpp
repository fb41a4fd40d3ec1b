#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ali {

/// Thrown when a caller violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LoadErrorKind {
  io,
  malformed_header,
  truncated,
  trailing_bytes,
  unsorted,
  duplicate_key,
  out_of_universe,
};

const char* to_string(LoadErrorKind kind);

/// Raised by the binary table/workload readers and the model parsers.
class LoadError : public std::runtime_error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  LoadErrorKind kind() const noexcept { return kind_; }

 private:
  LoadErrorKind kind_;
};

/// Regression input that cannot determine a unique fit.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Neural training produced a non-finite loss.
class Divergence : public std::runtime_error {
 public:
  explicit Divergence(std::size_t epoch)
      : std::runtime_error("training diverged (non-finite loss) at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace ali
