#include "tdm/shared_fake.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tdm/grid.hpp"
#include "tdm/teacher.hpp"

namespace tdm {

Samples shared_fake_optimum(const GaussianMixture& p1, const GaussianMixture& p2,
                            const Samples& points, double sigma) {
  if (p1.dim() != p2.dim() || static_cast<std::size_t>(points.cols()) != p1.dim()) {
    throw std::invalid_argument("shared_fake_optimum: dimension mismatch");
  }
  Samples out(points.rows(), points.cols());
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    const Eigen::VectorXd x = points.row(r).transpose();
    const double l1 = p1.log_density(x, sigma);
    const double l2 = p2.log_density(x, sigma);
    const double hi = std::max(l1, l2);
    if (!std::isfinite(hi)) {
      throw std::domain_error("shared_fake_optimum: both densities vanish at a grid point");
    }
    const double a = std::exp(l1 - hi);
    const double b = std::exp(l2 - hi);
    out.row(r) = ((a * p1.score(x, sigma) + b * p2.score(x, sigma)) / (a + b)).transpose();
  }
  return out;
}

}  // namespace tdm

namespace tdm {

SharedFakeResult run_shared_fake_experiment(const SharedFakeConfig& config) {
  if (!(config.sigma_max > config.sigma_min) || !(config.sigma_min > 0.0)) {
    throw std::invalid_argument("shared fake: need 0 < sigma_min < sigma_max");
  }
  const double h = 0.5 * config.separation;
  const GaussianMixture p1({isotropic(1.0, Eigen::Vector2d(-h, 0.0), config.component_std)});
  const GaussianMixture p2({isotropic(1.0, Eigen::Vector2d(h, 0.0), config.component_std)});
  const GaussianMixture blend({isotropic(0.5, Eigen::Vector2d(-h, 0.0), config.component_std),
                               isotropic(0.5, Eigen::Vector2d(h, 0.0), config.component_std)});

  NetConfig nc;
  nc.data_dim = 2;
  nc.hidden = config.hidden;
  nc.sigma_data = std::sqrt(blend.covariance().trace() / 2.0);
  DenoiserNet net(nc, Role::fake, false, config.seed);
  TeacherTrainConfig tc;
  tc.iterations = config.iterations;
  tc.batch = config.batch;
  tc.lr = config.lr;
  tc.seed = config.seed;
  tc.log_every = 0;
  const double lo = config.sigma_min, hi = config.sigma_max;
  tc.time_sampler = [lo, hi](Rng& rng) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const NoiseSchedule schedule(std::max(10.0, hi));
  train_teacher(gmm_sampler(blend), net, schedule, tc);

  // grid over the diffused blend
  const double s = config.sigma_eval;
  const Eigen::VectorXd var = blend.covariance().diagonal().array() + s * s;
  GridSpec grid;
  grid.resolution = config.grid_resolution;
  for (int k = 0; k < 2; ++k) {
    grid.lower.push_back(-config.grid_half_width * std::sqrt(var[k]));
    grid.upper.push_back(config.grid_half_width * std::sqrt(var[k]));
  }
  grid.validate();
  const Samples x = grid.centers();
  Samples f;
  {
    ad::NoGradGuard guard;
    f = to_samples(net.forward(to_tensor(x), s));
  }
  const Samples learned = score_from_denoiser(f, x, s, schedule);
  const Samples target = shared_fake_optimum(p1, p2, x, s);

  SharedFakeResult res;
  res.blend_error = std::sqrt((learned - target).squaredNorm() / target.squaredNorm());
  double d1 = 0, n1 = 0, d2 = 0, n2 = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::VectorXd xr = x.row(r).transpose();
    const Eigen::VectorXd resp = blend.responsibilities(xr, s);
    if (resp.minCoeff() < config.overlap_threshold) continue;
    ++res.overlap_points;
    const Eigen::VectorXd s1 = p1.score(xr, s);
    const Eigen::VectorXd s2 = p2.score(xr, s);
    d1 += (learned.row(r).transpose() - s1).squaredNorm();
    n1 += s1.squaredNorm();
    d2 += (learned.row(r).transpose() - s2).squaredNorm();
    n2 += s2.squaredNorm();
  }
  if (res.overlap_points == 0) throw std::runtime_error("shared fake: empty overlap region");
  res.gap_first = std::sqrt(d1 / n1);
  res.gap_second = std::sqrt(d2 / n2);
  return res;
}

}  // namespace tdm
