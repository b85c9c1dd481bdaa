#pragma once

// Instance-level trajectory distillation: the student's single solver step
// regresses onto a multi-step teacher solve over the same interval.

#include <cstdint>

#include "tdm/denoiser.hpp"
#include "tdm/optim.hpp"
#include "tdm/sampler.hpp"

namespace tdm {

struct InstanceConfig {
  int steps = 4;
  /// Teacher solver steps per student step.
  int teacher_steps = 4;
  Solver solver = Solver::euler;
  /// Teacher samples the regression inputs are diffused from.
  std::size_t pool_size = 8192;
  int pool_solver_steps = 64;
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double clip_norm = 1.0;
  std::size_t batch = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

struct InstanceMetrics {
  std::size_t iteration = 0;
  int interval = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  bool skipped = false;
};

class InstanceTrajectoryTrainer {
 public:
  /// Builds the teacher sample pool with a Heun solve; the student starts as a
  /// copy of the teacher.
  InstanceTrajectoryTrainer(const DenoiserNet& teacher, NoiseSchedule schedule,
                            InstanceConfig config);

  InstanceMetrics step();
  /// Loss of the current student on one batch without updating it.
  double evaluate_loss(std::size_t interval, Rng& rng) const;

  const DenoiserNet& student() const { return student_; }
  const Samples& pool() const { return pool_; }
  std::size_t iteration() const { return iteration_; }

 private:
  ad::Tensor batch_loss(std::size_t interval, Rng& rng) const;

  DenoiserNet teacher_;
  DenoiserNet student_;
  NoiseSchedule schedule_;
  InstanceConfig config_;
  IntervalPartition partition_;
  Samples pool_;
  optim::AdamW opt_;
  Rng rng_;
  std::size_t iteration_ = 0;
};

}  // namespace tdm
