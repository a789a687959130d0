#pragma once

#include <stdexcept>
#include <string>

namespace mapgen {

/// Invalid parameters or configuration (bad tile size, factor < 1, schedule range).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a contract (dimension mismatch, unknown class, missing tile).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem or codec failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mapgen
