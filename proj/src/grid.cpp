#include "tdm/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "tdm/gmm.hpp"

namespace tdm {

std::size_t GridSpec::cell_count() const {
  std::size_t n = 1;
  for (std::size_t a = 0; a < dim(); ++a) n *= resolution;
  return n;
}

double GridSpec::cell_width(std::size_t axis) const {
  return (upper[axis] - lower[axis]) / static_cast<double>(resolution);
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < dim(); ++a) v *= cell_width(a);
  return v;
}

Samples GridSpec::centers() const {
  const std::size_t n = cell_count();
  Samples out(n, dim());
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t rem = c;
    for (std::size_t a = dim(); a-- > 0;) {
      const std::size_t idx = rem % resolution;
      rem /= resolution;
      out(c, a) = lower[a] + (static_cast<double>(idx) + 0.5) * cell_width(a);
    }
  }
  return out;
}

long GridSpec::cell_of(const double* x) const {
  long flat = 0;
  for (std::size_t a = 0; a < dim(); ++a) {
    const double u = (x[a] - lower[a]) / cell_width(a);
    if (!(u >= 0.0) || u >= static_cast<double>(resolution)) return -1;
    flat = flat * static_cast<long>(resolution) + static_cast<long>(u);
  }
  return flat;
}

void GridSpec::validate() const {
  if (lower.empty() || lower.size() != upper.size()) {
    throw std::invalid_argument("grid: bounds must be non-empty and of equal length");
  }
  if (resolution < 16) throw std::invalid_argument("grid: resolution must be >= 16");
  if (dim() > 3) throw std::invalid_argument("grid: at most 3 dimensions supported");
  for (std::size_t a = 0; a < dim(); ++a) {
    if (!(upper[a] > lower[a])) throw std::invalid_argument("grid: empty axis range");
  }
}

GridSpec GridSpec::around(const GaussianMixture& gmm, double half_width_in_std,
                          std::size_t resolution) {
  GridSpec g;
  g.resolution = resolution;
  const Eigen::VectorXd mu = gmm.mean();
  const double half = half_width_in_std * gmm.data_std();
  for (std::size_t a = 0; a < gmm.dim(); ++a) {
    g.lower.push_back(mu[a] - half);
    g.upper.push_back(mu[a] + half);
  }
  g.validate();
  return g;
}

}  // namespace tdm
