#include "tdm/baselines.hpp"

#include <iostream>
#include <stdexcept>

#include "tdm/teacher.hpp"

namespace tdm {

void InstanceConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw std::invalid_argument("instance." + field + ": " + what);
  };
  if (steps < 1) fail("steps", "must be >= 1");
  if (teacher_steps < 1) fail("teacher_steps", "must be >= 1");
  if (pool_size < 1) fail("pool_size", "must be >= 1");
  if (pool_solver_steps < 1) fail("pool_solver_steps", "must be >= 1");
  if (!(lr > 0.0)) fail("lr", "must be > 0");
  if (batch < 1) fail("batch", "must be >= 1");
}

namespace {

optim::AdamWConfig adam_config(const InstanceConfig& c) {
  optim::AdamWConfig out;
  out.lr = c.lr;
  out.beta1 = c.beta1;
  out.beta2 = c.beta2;
  out.clip_norm = c.clip_norm;
  return out;
}

}  // namespace

InstanceTrajectoryTrainer::InstanceTrajectoryTrainer(const DenoiserNet& teacher,
                                                     NoiseSchedule schedule, InstanceConfig config)
    : teacher_(teacher),
      student_(teacher.clone_as(Role::student, false)),
      schedule_(schedule),
      config_(config),
      partition_(partition(config.steps, schedule.terminal_time())),
      opt_(adam_config(config), student_.parameters()),
      rng_(config.seed) {
  config_.validate();
  ad::NoGradGuard guard;
  const ad::Tensor x_T = prior_sample(config_.pool_size, teacher_.config().data_dim, schedule_, rng_);
  pool_ = to_samples(
      solve_ode(x_T, config_.pool_solver_steps, Solver::heun, schedule_, as_denoiser(teacher_)));
}

ad::Tensor InstanceTrajectoryTrainer::batch_loss(std::size_t interval, Rng& rng) const {
  const double t = partition_.upper(interval);
  const double s = partition_.lower(interval);
  std::uniform_int_distribution<Eigen::Index> pick(0, pool_.rows() - 1);
  Samples x_t(config_.batch, pool_.cols());
  for (Eigen::Index r = 0; r < x_t.rows(); ++r) x_t.row(r) = pool_.row(pick(rng));
  x_t += schedule_.sigma(t) * standard_normal(x_t.rows(), x_t.cols(), rng);
  const ad::Tensor input = to_tensor(x_t);

  ad::Tensor target;
  {
    ad::NoGradGuard guard;
    const auto teacher_fn = as_denoiser(teacher_);
    target = input;
    for (int j = config_.teacher_steps - 1; j >= 0; --j) {
      const double hi =
          j + 1 == config_.teacher_steps ? t : s + (t - s) * (j + 1) / config_.teacher_steps;
      const double lo = j == 0 ? s : s + (t - s) * j / config_.teacher_steps;
      target = solver_step(config_.solver, target, hi, lo, schedule_, teacher_fn).next;
    }
  }
  const ad::Tensor pred =
      solver_step(config_.solver, input, t, s, schedule_, as_denoiser(student_)).next;
  return ad::mean(ad::row_sum(ad::square(ad::sub(pred, target))));
}

InstanceMetrics InstanceTrajectoryTrainer::step() {
  InstanceMetrics met;
  met.iteration = iteration_++;
  const std::size_t m =
      std::uniform_int_distribution<std::size_t>(0, config_.steps - 1)(rng_);
  met.interval = static_cast<int>(m);
  try {
    ad::Tape tape;
    ad::Tensor loss = batch_loss(m, rng_);
    met.loss = loss.item();
    auto grads = tape.backward(loss);
    std::vector<ad::Tensor> g;
    for (const auto& p : student_.parameters()) g.push_back(grads.of(p));
    auto report = opt_.step(student_.parameters(), g);
    met.grad_norm = report.grad_norm;
    met.skipped = !report.applied;
  } catch (const ad::NonFiniteError& e) {
    std::cerr << "[instance] iteration " << met.iteration << " skipped: " << e.what() << "\n";
    met.skipped = true;
  }
  return met;
}

double InstanceTrajectoryTrainer::evaluate_loss(std::size_t interval, Rng& rng) const {
  if (interval >= static_cast<std::size_t>(config_.steps)) {
    throw std::out_of_range("evaluate_loss: interval out of range");
  }
  ad::NoGradGuard guard;
  return batch_loss(interval, rng).item();
}

}  // namespace tdm
