#pragma once

#include <stdexcept>
#include <string>

namespace dsd {

/// File could not be opened, read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bytes on disk do not follow the expected layout (bad magic, truncation, NaN payload).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor extents disagree with each other or with the scene manifest.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or degenerate geometry: non-orthonormal rotation, behind-camera point, zero baseline.
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A score or loss was requested over an empty set of visible views.
struct EmptyViewSetError : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace dsd
