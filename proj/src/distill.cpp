#include "tdm/distill.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "tdm/importance.hpp"
#include "tdm/partition.hpp"

namespace tdm {

std::string to_string(GeneratorObjective o) { return o == GeneratorObjective::l2 ? "l2" : "huber"; }

GeneratorObjective objective_from_string(const std::string& name) {
  if (name == "l2") return GeneratorObjective::l2;
  if (name == "huber") return GeneratorObjective::huber;
  throw std::invalid_argument("unknown generator objective '" + name + "' (available: l2, huber)");
}

std::string to_string(LossWeighting w) {
  return w == LossWeighting::uniform ? "uniform" : "preconditioned";
}

LossWeighting weighting_from_string(const std::string& name) {
  if (name == "uniform") return LossWeighting::uniform;
  if (name == "preconditioned") return LossWeighting::preconditioned;
  throw std::invalid_argument("unknown weighting '" + name +
                              "' (available: uniform, preconditioned)");
}

void DistillConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw std::invalid_argument("distill." + field + ": " + what);
  };
  if (steps_list.empty()) fail("steps_list", "must not be empty");
  for (int k : steps_list) {
    if (k < 1) fail("steps_list", "step counts must be >= 1");
  }
  if (huber_c && !(*huber_c > 0.0)) fail("huber_c", "must be > 0");
  if (!(importance_clip >= 1.0)) fail("importance_clip", "must be >= 1");
  if (fake_updates_per_iter < 1) fail("fake_updates_per_iter", "must be >= 1");
  if (!(lr_generator > 0.0)) fail("lr_generator", "must be > 0");
  if (!(lr_fake > 0.0)) fail("lr_fake", "must be > 0");
  if (batch < 1) fail("batch", "must be >= 1");
  if (objective == GeneratorObjective::huber && lambda_rule == LambdaRule::dmd_norm) {
    fail("lambda_rule", "dmd-norm applies to the l2 objective only");
  }
}

ad::Tensor fake_score_loss(const DenoiserNet& fake, const ad::Tensor& x_tau,
                           std::span<const double> sigma, int steps, const ad::Tensor& x_hat,
                           std::span<const double> weight, LossWeighting omega) {
  const std::size_t n = x_tau.rows();
  if (weight.size() != n || sigma.size() != n) {
    throw std::invalid_argument("fake_score_loss: one weight and sigma per row required");
  }
  std::vector<double> w(weight.begin(), weight.end());
  if (omega == LossWeighting::preconditioned) {
    const double sd2 = fake.config().sigma_data * fake.config().sigma_data;
    for (std::size_t r = 0; r < n; ++r) {
      const double s2 = sigma[r] * sigma[r];
      w[r] *= (s2 + sd2) / (s2 * sd2);
    }
  }
  ad::Tensor per_row = ad::row_sum(ad::square(ad::sub(fake.forward(x_tau, sigma, steps), x_hat)));
  return ad::mean(ad::mul(per_row, ad::Tensor::from({n}, std::move(w))));
}

namespace {

optim::AdamWConfig adam_config(const DistillConfig& c, double lr) {
  optim::AdamWConfig out;
  out.lr = lr;
  out.beta1 = c.beta1;
  out.beta2 = c.beta2;
  out.clip_norm = c.clip_norm;
  out.weight_decay = c.weight_decay;
  return out;
}

std::vector<ad::Tensor> grads_for(const ad::Gradients& g, const std::vector<ad::Tensor>& params) {
  std::vector<ad::Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(g.of(p));
  return out;
}

}  // namespace

Distiller::Distiller(const DenoiserNet& teacher, NoiseSchedule schedule, DistillConfig config)
    : Distiller(teacher, teacher.clone_as(Role::student, config.unified()),
                teacher.clone_as(Role::fake, config.unified()), schedule, config) {}

Distiller::Distiller(const DenoiserNet& teacher, DenoiserNet student, DenoiserNet fake,
                     NoiseSchedule schedule, DistillConfig config)
    : teacher_(teacher),
      student_(std::move(student)),
      fake_(std::move(fake)),
      schedule_(schedule),
      config_(std::move(config)),
      gen_opt_(adam_config(config_, config_.lr_generator), student_.parameters()),
      fake_opt_(adam_config(config_, config_.lr_fake), fake_.parameters()),
      rng_(config_.seed) {
  config_.validate();
  if (!(student_.config() == teacher_.config()) || !(fake_.config() == teacher_.config())) {
    throw std::invalid_argument("Distiller: student and fake must share the teacher architecture");
  }
  huber_c_ = config_.huber_c.value_or(default_huber_c(teacher_.config().data_dim));
}

DistillMetrics Distiller::step() {
  DistillMetrics met;
  met.iteration = iteration_++;
  const auto& ks = config_.steps_list;
  int steps = ks.front();
  if (ks.size() > 1) {
    steps = ks[std::uniform_int_distribution<std::size_t>(0, ks.size() - 1)(rng_)];
  }
  const IntervalPartition part = partition(steps, schedule_.terminal_time());
  const std::size_t m = std::uniform_int_distribution<std::size_t>(0, steps - 1)(rng_);
  met.steps = steps;
  met.interval = static_cast<int>(m);

  const std::size_t n = config_.batch;
  const std::size_t d = teacher_.config().data_dim;
  ad::Tensor x_T = prior_sample(n, d, schedule_, rng_);
  std::vector<double> tau(n), sigma(n);
  for (std::size_t b = 0; b < n; ++b) {
    tau[b] = sample_tau(part, m, rng_);
    sigma[b] = schedule_.sigma(tau[b]);
  }

  try {
    ad::Tape gen_tape;
    const TrajectoryRecord rec =
        sample_trajectory(as_denoiser(student_, steps), part, schedule_, x_T, m, config_.solver);
    const ad::Tensor& x_m = rec.point_at(m);
    const ad::Tensor& x_hat = rec.clean_at(m);
    const Samples x_hat_s = to_samples(x_hat);

    const ProposalDraw draw =
        config_.target == MatchTarget::trajectory
            ? diffuse_from_trajectory(to_samples(x_m), x_hat_s, part.lower(m), tau, schedule_,
                                      rng_, config_.importance_clip, config_.importance_weights)
            : diffuse_from_clean(x_hat_s, tau, schedule_, rng_);
    met.weight_mean = draw.weight.mean();
    met.weight_min = draw.weight.min();
    met.weight_max = draw.weight.max();
    met.weight_clipped = draw.weight.clipped;
    const ad::Tensor x_tau = to_tensor(draw.x_tau);
    const ad::Tensor fake_target = ad::detach(x_hat);

    for (int j = 0; j < config_.fake_updates_per_iter; ++j) {
      ad::Tape fake_tape;
      ad::Tensor loss = fake_score_loss(fake_, x_tau, sigma, steps, fake_target,
                                        draw.weight.value, config_.omega_rule);
      met.fake_loss = loss.item();
      auto report = fake_opt_.step(fake_.parameters(),
                                   grads_for(fake_tape.backward(loss), fake_.parameters()));
      met.fake_grad_norm = report.grad_norm;
    }

    const ad::Tensor& matched = config_.target == MatchTarget::trajectory ? x_m : x_hat;
    ad::Tensor x_rev;
    {
      ad::NoGradGuard guard;
      ad::Tensor f_real = teacher_.forward(x_tau, sigma);
      ad::Tensor f_fake = fake_.forward(x_tau, sigma, steps);
      x_rev = revised_target(ad::detach(matched), f_real, f_fake, config_.lambda_rule);
    }
    met.correction_norm = (to_samples(x_rev) - to_samples(matched)).rowwise().norm().mean();
    ad::Tensor loss = config_.objective == GeneratorObjective::l2
                          ? generator_loss_l2(matched, x_rev)
                          : generator_loss_huber(matched, x_rev, huber_c_);
    met.generator_loss = loss.item();
    auto report = gen_opt_.step(student_.parameters(),
                                grads_for(gen_tape.backward(loss), student_.parameters()));
    met.generator_grad_norm = report.grad_norm;
    met.skipped = !report.applied;
  } catch (const ad::NonFiniteError& e) {
    std::cerr << "[distill] iteration " << met.iteration << " skipped: " << e.what() << "\n";
    met.skipped = true;
  }
  return met;
}

}  // namespace tdm
