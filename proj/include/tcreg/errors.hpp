#pragma once

#include <stdexcept>

namespace tcreg {

/// Malformed or inconsistent input: CSV cells, grids, model files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model specification or argument combination.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace tcreg
