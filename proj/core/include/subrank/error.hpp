#pragma once

#include <stdexcept>
#include <string>

namespace subrank {

/// Broad failure classes. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  config,              // malformed or inconsistent configuration
  data,                // rejected input record, unknown id, empty dataset
  undefined_signal,    // a rate whose denominator is zero
  sampling_exhausted,  // rejection sampling ran out of attempts
  divergence,          // non-finite loss during training
  undefined_metric,    // metric not defined for the given input
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit code for an error kind: 2 config, 3 data, 4 divergence,
/// 5 undefined metric.
int exit_code(ErrorKind kind) noexcept;

}  // namespace subrank
