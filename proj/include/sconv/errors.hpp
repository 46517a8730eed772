#pragma once

#include <stdexcept>
#include <string>

namespace sconv {

/// Tensor/kernel/window dimension mismatch.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid runtime configuration (strides, pool tiling, sweep configs).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Corrupted or inconsistent compressed / serialized data.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// File I/O failure.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sconv
