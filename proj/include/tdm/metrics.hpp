#pragma once

// Sample-based comparisons against analytic mixtures: sliced Wasserstein
// distance, histogram KL on a grid, per-boundary trajectory marginals and mode
// coverage.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdm/gmm.hpp"
#include "tdm/grid.hpp"
#include "tdm/sampler.hpp"

namespace tdm {

inline constexpr int kDefaultProjections = 128;
inline constexpr std::size_t kMinMetricSamples = 100;

/// Exact 1-D W2 between two empirical measures (quantile functions merged).
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

/// Mean over random unit directions of the 1-D W2 between projections.
/// Throws std::invalid_argument for fewer than 100 points in either set.
double sliced_wasserstein(const Samples& a, const Samples& b, int projections, Rng& rng);

struct GridKL {
  double kl = 0.0;
  /// Fraction of samples outside the grid bounds (not histogrammed).
  double out_of_bounds = 0.0;
};

/// KL(histogram of samples with one pseudo-count per cell || p_t integrated
/// over the cells by the midpoint rule).
GridKL grid_kl_vs_analytic(const Samples& samples, const GaussianMixture& gmm, double t,
                           const NoiseSchedule& schedule, const GridSpec& grid);

/// grid-KL of n exact draws from p_t: the value a perfect sampler would get.
double grid_kl_floor(const GaussianMixture& gmm, double t, const NoiseSchedule& schedule,
                     const GridSpec& grid, std::size_t n, Rng& rng);

/// Sliced W2 between the boundary points x_{t_i}, i = 0..K, of a rollout and
/// exact draws from the diffused mixture at t_i.
std::vector<double> trajectory_marginal_distance(const TrajectoryRecord& record,
                                                 const GaussianMixture& gmm,
                                                 const IntervalPartition& partition,
                                                 const NoiseSchedule& schedule, int projections,
                                                 Rng& rng);

/// Matched-sampling floors for trajectory_marginal_distance: two independent
/// exact draw sets of size n per boundary.
std::vector<double> trajectory_marginal_floors(const GaussianMixture& gmm,
                                               const IntervalPartition& partition,
                                               const NoiseSchedule& schedule, std::size_t n,
                                               int projections, Rng& rng);

struct ModeCoverage {
  std::size_t covered = 0;
  std::vector<std::size_t> counts;  // per mode
  std::size_t unassigned = 0;
};

/// Each sample goes to its nearest component mean if it lies within
/// radius_in_std component standard deviations of it. A mode is covered when
/// it receives at least min_fraction of all samples.
ModeCoverage mode_coverage(const Samples& samples, const GaussianMixture& gmm,
                           double radius_in_std = 3.0, double min_fraction = 0.01);

/// Named scalar results of one evaluation.
class MetricReport {
 public:
  /// Throws std::invalid_argument for non-finite values.
  void set(const std::string& name, double value);
  void label(const std::string& name, const std::string& value);
  double get(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<std::pair<std::string, double>>& metrics() const { return metrics_; }
  const std::vector<std::pair<std::string, std::string>>& labels() const { return labels_; }

  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::string config_digest;

  std::string csv_header() const;
  std::string csv_row() const;
  std::string to_json() const;

 private:
  std::vector<std::pair<std::string, double>> metrics_;
  std::vector<std::pair<std::string, std::string>> labels_;
};

struct EvalRequest {
  int steps = 4;
  Solver solver = Solver::euler;
  std::size_t n_samples = 10000;
  int projections = kDefaultProjections;
  std::uint64_t seed = 0;
  /// Also compute the 64-step Heun floor of this denoiser (the teacher).
  std::optional<DenoiseFn> teacher;
  int teacher_steps = 64;
};

/// Rolls the sampler out and computes every metric against the mixture:
/// sliced_w2, sliced_w2_floor, grid_kl, grid_kl_floor, out_of_bounds,
/// modes_covered, traj_sw_<i> and traj_floor_<i>, and teacher_sliced_w2 when
/// a teacher is given.
MetricReport evaluate_sampler(const DenoiseFn& denoiser, const GaussianMixture& gmm,
                              const NoiseSchedule& schedule, const EvalRequest& request);

}  // namespace tdm
