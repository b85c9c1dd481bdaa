#pragma once

// Optimum of a single fake score trained on a blend of two distributions:
// (p1 * grad log p1 + p2 * grad log p2) / (p1 + p2).

#include <cstdint>
#include <vector>

#include "tdm/gmm.hpp"
#include "tdm/types.hpp"

namespace tdm {

/// Blended score at every row of `points`, with p1 and p2 diffused to noise
/// level sigma. Throws std::domain_error where both densities underflow.
Samples shared_fake_optimum(const GaussianMixture& p1, const GaussianMixture& p2,
                            const Samples& points, double sigma);

}  // namespace tdm

namespace tdm {

/// A single unconditioned score trained on equal draws from two isotropic
/// Gaussians at (-separation/2, 0) and (+separation/2, 0).
struct SharedFakeConfig {
  double separation = 2.0;
  double component_std = 0.5;
  double sigma_eval = 1.0;
  double sigma_min = 0.5;
  double sigma_max = 2.0;
  std::vector<std::size_t> hidden{64, 64, 64};
  std::size_t iterations = 4000;
  std::size_t batch = 256;
  double lr = 2e-3;
  std::uint64_t seed = 0;
  std::size_t grid_resolution = 32;
  /// Grid half-width in standard deviations of the diffused blend.
  double grid_half_width = 2.0;
  /// Overlap points have both responsibilities at least this large.
  double overlap_threshold = 0.1;
};

struct SharedFakeResult {
  /// Relative L2 distance of the trained score to the blend formula on the grid.
  double blend_error = 0.0;
  /// Relative L2 distance of the trained score to each component score on the
  /// overlap points.
  double gap_first = 0.0;
  double gap_second = 0.0;
  std::size_t overlap_points = 0;
};

SharedFakeResult run_shared_fake_experiment(const SharedFakeConfig& config);

}  // namespace tdm
