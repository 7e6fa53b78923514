#pragma once

#include <stdexcept>
#include <string>

namespace chtf {

/// Shape, rank or argument contract violations (bad mode index, dim
/// mismatch, rank out of range).
class ShapeError : public std::invalid_argument {
public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed on-disk data: bad magic, version, manifest, CSV, config.
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failures (missing file, unwritable path, short read).
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failures: non-finite loss, SVD breakdown.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace chtf
