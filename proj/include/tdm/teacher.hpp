#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tdm/denoiser.hpp"
#include "tdm/gmm.hpp"
#include "tdm/grid.hpp"
#include "tdm/sampler.hpp"
#include "tdm/schedule.hpp"

namespace tdm {

/// Draws a clean training batch.
using DataSampler = std::function<Samples(std::size_t n, Rng& rng)>;
/// Draws a diffusion time.
using TimeSampler = std::function<double(Rng& rng)>;

DataSampler gmm_sampler(const GaussianMixture& gmm);
/// Uniform resampling with replacement from a fixed dataset.
DataSampler dataset_sampler(Samples data);

/// Per-sample weight omega_t of the denoising regression.
enum class LossWeighting {
  uniform,         // omega_t = 1
  preconditioned,  // omega_t = 1 / c_out(sigma_t)^2
};

struct TeacherTrainConfig {
  std::size_t iterations = 20000;
  std::size_t batch = 256;
  double lr = 2e-3;
  /// Cosine decay from lr down to lr_final.
  double lr_final = 1e-5;
  double beta1 = 0.9;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
  LossWeighting weighting = LossWeighting::uniform;
  /// Uniform on [0, T] when empty.
  TimeSampler time_sampler;
  /// Called for every logged iteration.
  std::function<void(std::size_t iteration, double loss)> on_log;
};

struct TeacherTrainReport {
  std::vector<std::size_t> logged_iterations;
  std::vector<double> logged_loss;
  double final_loss = 0.0;
  std::int64_t skipped_steps = 0;
};

/// Batch mean of omega_t ||f(x_t, t) - x||^2 with x_t = x + sigma(t_b) eps.
ad::Tensor denoising_loss(const DenoiserNet& net, const ad::Tensor& x, std::span<const double> sigma,
                          const ad::Tensor& eps,
                          LossWeighting weighting = LossWeighting::uniform);

/// Denoising pretraining. A NaN loss aborts with std::runtime_error carrying
/// the iteration and last finite loss.
TeacherTrainReport train_teacher(const DataSampler& data, DenoiserNet& net,
                                 const NoiseSchedule& schedule, const TeacherTrainConfig& config);

/// mean ||s_net - s*||^2 / mean ||s*||^2 over the grid centers at time t.
double grid_score_error(const DenoiserNet& net, const GaussianMixture& gmm,
                        const NoiseSchedule& schedule, double t, const GridSpec& grid);

/// Denoiser callable for the sampler from a network at fixed K.
DenoiseFn as_denoiser(const DenoiserNet& net, int steps = 0);
/// Analytic posterior-mean denoiser of a mixture.
DenoiseFn as_denoiser(const GaussianMixture& gmm);

}  // namespace tdm
