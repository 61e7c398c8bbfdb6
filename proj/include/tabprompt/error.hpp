#pragma once

#include <stdexcept>
#include <string>

namespace tabprompt {

/// Bad input or configuration: missing files, schema mismatches, violated
/// preconditions. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Failure while doing work that was validated up front (I/O, network).
/// The CLI maps these to exit code 1.
class RuntimeFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace tabprompt
