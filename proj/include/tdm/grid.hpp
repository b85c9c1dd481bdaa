#pragma once

#include <cstddef>
#include <vector>

#include "tdm/types.hpp"

namespace tdm {

class GaussianMixture;

/// Axis-aligned regular grid; cells are indexed row-major with the first
/// coordinate slowest.
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t resolution = 64;

  std::size_t dim() const { return lower.size(); }
  std::size_t cell_count() const;
  double cell_width(std::size_t axis) const;
  double cell_volume() const;
  /// Cell centers, one per row.
  Samples centers() const;
  /// Flat cell index, or -1 when x lies outside the bounds.
  long cell_of(const double* x) const;

  /// Throws std::invalid_argument for resolution < 16 or empty bounds.
  void validate() const;

  /// Mixture mean +/- `half_width_in_std` * data_std on every axis.
  static GridSpec around(const GaussianMixture& gmm, double half_width_in_std = 4.0,
                         std::size_t resolution = 64);
};

}  // namespace tdm
