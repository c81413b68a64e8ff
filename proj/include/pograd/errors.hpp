#ifndef POGRAD_ERRORS_HPP
#define POGRAD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pograd {

// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that violates the dataset schema or its invariants.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or failed numerical procedures (divergent samplers,
// exhausted retries).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pograd

#endif  // POGRAD_ERRORS_HPP
