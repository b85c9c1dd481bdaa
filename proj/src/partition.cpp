#include "tdm/partition.hpp"

#include <stdexcept>
#include <string>

namespace tdm {

IntervalPartition partition(int steps, double terminal_time) {
  if (steps < 1) throw std::invalid_argument("partition: K must be >= 1, got " + std::to_string(steps));
  if (!(terminal_time > 0.0)) throw std::invalid_argument("partition: T must be > 0");
  IntervalPartition p;
  p.steps = steps;
  p.terminal_time = terminal_time;
  p.boundaries.resize(steps + 1);
  for (int i = 0; i <= steps; ++i) p.boundaries[i] = terminal_time * i / steps;
  p.boundaries[steps] = terminal_time;
  return p;
}

double sample_tau(const IntervalPartition& p, std::size_t i, Rng& rng) {
  if (i >= static_cast<std::size_t>(p.steps)) {
    throw std::out_of_range("sample_tau: interval index out of range");
  }
  const double lo = p.lower(i);
  const double hi = p.upper(i);
  // generate_canonical lies in [0, 1); flipping it gives (0, 1] so the upper
  // endpoint is reachable. A draw that rounds onto the lower endpoint (in
  // particular tau = 0) is redrawn.
  for (;;) {
    const double u = 1.0 - std::generate_canonical<double, 53>(rng);
    const double tau = lo + (hi - lo) * u;
    if (tau > lo) return tau;
  }
}

}  // namespace tdm
