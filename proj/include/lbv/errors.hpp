#pragma once

#include <stdexcept>
#include <string>

namespace lbv {

// Exit codes used by the CLI. Library code throws; the CLI maps.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitEstimation = 3,
  kExitIo = 4,
};

// Bad input data, schema, config, or violated inventory invariants.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be read or written.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// An optimizer failed to converge. Carries the iteration trace so a
// failed fit is never silent.
struct EstimationError : std::runtime_error {
  EstimationError(const std::string& msg, std::string trace_text)
      : std::runtime_error(msg), trace(std::move(trace_text)) {}
  std::string trace;
};

}  // namespace lbv
