#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace admmnet {

/// Operands disagree on grid height/width, channel count or kernel size.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A per-frequency reconstruction solve hit a zero denominator.
class SingularReconstruction : public std::runtime_error {
 public:
  SingularReconstruction(int row, int col)
      : std::runtime_error("singular reconstruction at frequency (" + std::to_string(row) + ", " +
                           std::to_string(col) + "): no sampled data and no filter response"),
        row_(row),
        col_(col) {}

  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

 private:
  int row_;
  int col_;
};

/// Backward pass was handed a tape that was never recorded or belongs to another run.
class MissingTape : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed, truncated or incompatible container file.
class ContainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run configuration failed validation; the message names the offending JSON path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

namespace detail {

// Per-frequency denominators that vanish up to rounding (relative to the largest) are
// treated as exact zeros: no sampled data and no filter response at that frequency.
inline void check_denominators(const std::vector<double>& d, int width) {
  double peak = 0.0;
  for (double v : d) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(d[i] > 1e-12 * peak)) throw SingularReconstruction(static_cast<int>(i) / width, static_cast<int>(i) % width);
}

}  // namespace detail

}  // namespace admmnet
