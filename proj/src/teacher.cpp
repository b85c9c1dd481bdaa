#include "tdm/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "tdm/optim.hpp"

namespace tdm {

namespace {
constexpr double kMinWeightSigma = 1e-3;
}  // namespace

DataSampler gmm_sampler(const GaussianMixture& gmm) {
  return [gmm](std::size_t n, Rng& rng) { return gmm.sample(n, rng); };
}

DataSampler dataset_sampler(Samples data) {
  if (data.rows() == 0) throw std::invalid_argument("dataset_sampler: empty dataset");
  return [data = std::move(data)](std::size_t n, Rng& rng) {
    std::uniform_int_distribution<Eigen::Index> pick(0, data.rows() - 1);
    Samples out(n, data.cols());
    for (std::size_t i = 0; i < n; ++i) out.row(i) = data.row(pick(rng));
    return out;
  };
}

ad::Tensor denoising_loss(const DenoiserNet& net, const ad::Tensor& x, std::span<const double> sigma,
                          const ad::Tensor& eps, LossWeighting weighting) {
  std::vector<double> noisy(x.data().begin(), x.data().end());
  const std::size_t d = x.cols();
  auto e = eps.data();
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += sigma[i / d] * e[i];
  ad::Tensor x_t = ad::Tensor::from(x.shape(), std::move(noisy));
  ad::Tensor diff = ad::sub(net.forward(x_t, sigma), x);
  if (weighting == LossWeighting::preconditioned) {
    // omega(sigma) = 1 / c_out(sigma)^2: unit-variance targets for the raw network.
    const double sd2 = net.config().sigma_data * net.config().sigma_data;
    std::vector<double> w(x.rows());
    for (std::size_t r = 0; r < w.size(); ++r) {
      const double s2 = std::max(sigma[r] * sigma[r], kMinWeightSigma * kMinWeightSigma);
      w[r] = (s2 + sd2) / (s2 * sd2);
    }
    ad::Tensor per_row = ad::mul(ad::row_sum(ad::square(diff)), ad::Tensor::from({x.rows()}, w));
    return ad::scale(ad::sum(per_row), 1.0 / static_cast<double>(x.rows()));
  }
  return ad::scale(ad::sum(ad::square(diff)), 1.0 / static_cast<double>(x.rows()));
}

TeacherTrainReport train_teacher(const DataSampler& data, DenoiserNet& net,
                                 const NoiseSchedule& schedule, const TeacherTrainConfig& config) {
  Rng rng(config.seed);
  optim::AdamWConfig opt_cfg;
  opt_cfg.lr = config.lr;
  opt_cfg.beta1 = config.beta1;
  opt_cfg.clip_norm = config.clip_norm;
  optim::AdamW opt(opt_cfg, net.parameters());
  std::uniform_real_distribution<double> uniform_t(0.0, schedule.terminal_time());

  TeacherTrainReport report;
  double last_finite = std::numeric_limits<double>::quiet_NaN();
  const std::size_t d = net.config().data_dim;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const double progress = static_cast<double>(it) / static_cast<double>(config.iterations);
    opt.set_lr(config.lr_final + 0.5 * (config.lr - config.lr_final) *
                                     (1.0 + std::cos(std::numbers::pi * progress)));

    ad::Tensor x = to_tensor(data(config.batch, rng));
    std::vector<double> sigma(config.batch);
    for (double& s : sigma) {
      s = schedule.sigma(config.time_sampler ? config.time_sampler(rng) : uniform_t(rng));
    }
    ad::Tensor eps = to_tensor(standard_normal(config.batch, d, rng));

    ad::Tape tape;
    ad::Tensor loss;
    try {
      loss = denoising_loss(net, x, sigma, eps, config.weighting);
    } catch (const ad::NonFiniteError&) {
      std::ostringstream os;
      os << "teacher training diverged at iteration " << it << " (last finite loss "
         << last_finite << ")";
      throw std::runtime_error(os.str());
    }
    last_finite = loss.item();
    auto grads = tape.backward(loss);
    std::vector<ad::Tensor> g;
    for (const auto& p : net.parameters()) g.push_back(grads.of(p));
    opt.step(net.parameters(), g);

    if (config.log_every > 0 && (it % config.log_every == 0 || it + 1 == config.iterations)) {
      report.logged_iterations.push_back(it);
      report.logged_loss.push_back(last_finite);
      if (config.on_log) config.on_log(it, last_finite);
    }
  }
  report.final_loss = last_finite;
  report.skipped_steps = opt.skipped();
  return report;
}

double grid_score_error(const DenoiserNet& net, const GaussianMixture& gmm,
                        const NoiseSchedule& schedule, double t, const GridSpec& grid) {
  schedule.check_time(t);
  const double sigma = schedule.sigma(t);
  if (!(sigma > 0.0)) throw std::invalid_argument("grid_score_error: requires t > 0");
  const Samples x = grid.centers();
  Samples f;
  {
    ad::NoGradGuard guard;
    f = to_samples(net.forward(to_tensor(x), sigma));
  }
  const Samples s_net = score_from_denoiser(f, x, t, schedule);
  const Samples s_true = gmm.score(x, sigma);
  return (s_net - s_true).squaredNorm() / s_true.squaredNorm();
}

DenoiseFn as_denoiser(const DenoiserNet& net, int steps) {
  return [&net, steps](const ad::Tensor& x, double sigma) { return net.forward(x, sigma, steps); };
}

DenoiseFn as_denoiser(const GaussianMixture& gmm) {
  return [&gmm](const ad::Tensor& x, double sigma) {
    return to_tensor(gmm.denoise(to_samples(x), sigma));
  };
}

}  // namespace tdm
