#pragma once

#include <stdexcept>

namespace handpose {

// File or system level failure: missing file, unwritable path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed content in a file we could open.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometrically or numerically degenerate input: collinear plane sample,
// rank-deficient cross-covariance, no RANSAC consensus.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace handpose
