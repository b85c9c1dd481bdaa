#pragma once

// Deterministic probability-flow ODE steps for sigma(t) = t schedules and
// K-step trajectory rollouts.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdm/autodiff.hpp"
#include "tdm/partition.hpp"
#include "tdm/schedule.hpp"
#include "tdm/types.hpp"

namespace tdm {

enum class Solver { euler, heun };

std::string to_string(Solver s);
Solver solver_from_string(const std::string& name);

/// Denoiser evaluated at a single noise level for the whole batch.
using DenoiseFn = std::function<ad::Tensor(const ad::Tensor& x, double sigma)>;

struct StepOutput {
  ad::Tensor next;   // x_s
  ad::Tensor clean;  // denoiser output at (x_t, t)
};

/// First-order (DDIM-style) step from t down to s; s = 0 returns the denoiser
/// output exactly.
StepOutput euler_step(const ad::Tensor& x_t, double t, double s, const NoiseSchedule& schedule,
                      const DenoiseFn& denoiser);

/// Explicit trapezoidal (Heun) step; falls back to euler_step when s = 0.
StepOutput heun_step(const ad::Tensor& x_t, double t, double s, const NoiseSchedule& schedule,
                     const DenoiseFn& denoiser);

StepOutput solver_step(Solver solver, const ad::Tensor& x_t, double t, double s,
                       const NoiseSchedule& schedule, const DenoiseFn& denoiser);

/// Closed-form PF-ODE map from T to 0 for zero-mean isotropic Gaussian data
/// with per-coordinate std `data_std` under sigma(t) = t.
double exact_gaussian_ode_map(double x_T, double data_std, double terminal_time);

/// Runs `steps` uniform solver steps from T to 0 and returns x_0.
ad::Tensor solve_ode(const ad::Tensor& x_T, int steps, Solver solver,
                     const NoiseSchedule& schedule, const DenoiseFn& denoiser);

/// One K-step rollout. Entry j of the vectors is the j-th executed step, which
/// produces boundary point x_{t_i} with i = K - 1 - j.
struct TrajectoryRecord {
  IntervalPartition partition;
  ad::Tensor start;                  // x_T
  std::vector<double> times;         // t_{K-1}, ..., t_0
  std::vector<ad::Tensor> points;    // x_{t_i}
  std::vector<ad::Tensor> clean;     // x̂_{t_i}: denoiser output of the producing step
  std::vector<bool> carries_grad;

  /// x_{t_i} for i in [0, K]; i = K is the starting noise.
  const ad::Tensor& point_at(std::size_t i) const;
  const ad::Tensor& clean_at(std::size_t i) const;
  /// x_{t_{i+1}}, the input of the step that produced x_{t_i}.
  const ad::Tensor& input_of(std::size_t i) const { return point_at(i + 1); }
};

/// Rolls the sampler out from x_T. Every step runs gradient-free except the
/// one producing x_{t_m} with m = grad_step (if given), which is recorded on
/// the caller's active tape with its input held constant.
TrajectoryRecord sample_trajectory(const DenoiseFn& denoiser, const IntervalPartition& partition,
                                   const NoiseSchedule& schedule, const ad::Tensor& x_T,
                                   std::optional<std::size_t> grad_step = std::nullopt,
                                   Solver solver = Solver::euler);

/// Starts from x_T = sigma(T) * eps with eps drawn from `seed`.
TrajectoryRecord sample_trajectory(const DenoiseFn& denoiser, const IntervalPartition& partition,
                                   const NoiseSchedule& schedule, std::size_t n, std::size_t dim,
                                   std::uint64_t seed,
                                   std::optional<std::size_t> grad_step = std::nullopt,
                                   Solver solver = Solver::euler);

/// x_T = sigma(T) * eps.
ad::Tensor prior_sample(std::size_t n, std::size_t dim, const NoiseSchedule& schedule, Rng& rng);

}  // namespace tdm
