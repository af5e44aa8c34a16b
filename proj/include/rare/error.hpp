#pragma once

#include <stdexcept>
#include <string>

namespace rare {

/// Malformed or unusable input data (bad CSV header, empty dataset, split
/// precondition violated).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint or manifest file that cannot be parsed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rare
