#pragma once

// Trajectory distribution matching: the student's K-step sampler states x_{t_i}
// are pushed towards the teacher's diffused marginals on each interval, using
// a fake score that tracks the student's own diffused states.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdm/denoiser.hpp"
#include "tdm/generator_loss.hpp"
#include "tdm/optim.hpp"
#include "tdm/sampler.hpp"
#include "tdm/teacher.hpp"

namespace tdm {

enum class GeneratorObjective { l2, huber };

/// Which point the generator loss matches at the chosen boundary.
enum class MatchTarget {
  trajectory,  // the noisy sampler state x_{t_m}
  clean,       // the clean prediction x̂_{t_m} (baseline)
};

std::string to_string(GeneratorObjective o);
GeneratorObjective objective_from_string(const std::string& name);
std::string to_string(LossWeighting w);
LossWeighting weighting_from_string(const std::string& name);

struct DistillConfig {
  /// Step counts drawn uniformly each iteration; more than one entry turns on
  /// step-count conditioning of the student and the fake score.
  std::vector<int> steps_list{4};
  GeneratorObjective objective = GeneratorObjective::huber;
  LambdaRule lambda_rule = LambdaRule::sigma2;
  /// Defaults to 0.00054 * sqrt(d).
  std::optional<double> huber_c;
  LossWeighting omega_rule = LossWeighting::uniform;
  double importance_clip = 10.0;
  bool importance_weights = true;
  MatchTarget target = MatchTarget::trajectory;
  int fake_updates_per_iter = 1;
  double lr_generator = 1e-4;
  double lr_fake = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double clip_norm = 1.0;
  double weight_decay = 0.0;
  std::size_t batch = 256;
  Solver solver = Solver::euler;
  std::uint64_t seed = 0;

  bool unified() const { return steps_list.size() > 1; }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct DistillMetrics {
  std::size_t iteration = 0;
  int steps = 0;
  int interval = 0;
  double fake_loss = 0.0;
  double generator_loss = 0.0;
  double weight_mean = 0.0;
  double weight_min = 0.0;
  double weight_max = 0.0;
  std::size_t weight_clipped = 0;
  double correction_norm = 0.0;
  double fake_grad_norm = 0.0;
  double generator_grad_norm = 0.0;
  bool skipped = false;
};

/// Batch mean of w * omega(sigma) * ||f(x_tau, sigma, K) - x_hat||^2.
ad::Tensor fake_score_loss(const DenoiserNet& fake, const ad::Tensor& x_tau,
                           std::span<const double> sigma, int steps, const ad::Tensor& x_hat,
                           std::span<const double> weight,
                           LossWeighting omega = LossWeighting::uniform);

class Distiller {
 public:
  /// Student and fake score start as copies of the teacher.
  Distiller(const DenoiserNet& teacher, NoiseSchedule schedule, DistillConfig config);
  Distiller(const DenoiserNet& teacher, DenoiserNet student, DenoiserNet fake,
            NoiseSchedule schedule, DistillConfig config);

  /// One iteration: roll out, update the fake score, update the student.
  /// A non-finite forward pass skips the iteration and sets `skipped`.
  DistillMetrics step();

  const DenoiserNet& teacher() const { return teacher_; }
  const DenoiserNet& student() const { return student_; }
  const DenoiserNet& fake() const { return fake_; }
  const DistillConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  std::size_t iteration() const { return iteration_; }
  double huber_c() const { return huber_c_; }

 private:
  DenoiserNet teacher_;
  DenoiserNet student_;
  DenoiserNet fake_;
  NoiseSchedule schedule_;
  DistillConfig config_;
  double huber_c_ = 0.0;
  optim::AdamW gen_opt_;
  optim::AdamW fake_opt_;
  Rng rng_;
  std::size_t iteration_ = 0;
};

}  // namespace tdm
