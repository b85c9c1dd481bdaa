#pragma once

#include <cstddef>
#include <vector>

#include "tdm/types.hpp"

namespace tdm {

/// Boundaries t_i = T * i / K, i = 0..K. Interval i is [t_i, t_{i+1}].
struct IntervalPartition {
  int steps = 1;
  double terminal_time = 1.0;
  std::vector<double> boundaries;

  double lower(std::size_t i) const { return boundaries.at(i); }
  double upper(std::size_t i) const { return boundaries.at(i + 1); }
};

/// Throws std::invalid_argument for K < 1 or T <= 0.
IntervalPartition partition(int steps, double terminal_time);

/// Uniform draw on (t_i, t_{i+1}]; in particular tau = 0 never occurs.
double sample_tau(const IntervalPartition& p, std::size_t i, Rng& rng);

}  // namespace tdm
