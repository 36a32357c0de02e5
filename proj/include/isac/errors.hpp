#pragma once

#include <stdexcept>
#include <string>

namespace isac {

/// Invalid configuration value or file (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate or out-of-bounds geometry (coincident points, position outside the area).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Domain failure in signal processing (zero-rank test, dimension mismatch, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure while reading or emitting results (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isac
