#include "tdm/gmm.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tdm {

// ---------------------------------------------------------------------------
// types.hpp helpers

ad::Tensor to_tensor(const Samples& s, bool requires_grad) {
  std::vector<double> data(s.data(), s.data() + s.size());
  return ad::Tensor::matrix(s.rows(), s.cols(), std::move(data), requires_grad);
}

Samples to_samples(const ad::Tensor& t) {
  const auto rows = static_cast<Eigen::Index>(t.rows());
  const auto cols = static_cast<Eigen::Index>(t.cols());
  return Eigen::Map<const Samples>(t.data().data(), rows, cols);
}

Samples standard_normal(std::size_t n, std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal;
  Samples out(n, d);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = normal(rng);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("gmm: no components");
  dim_ = static_cast<std::size_t>(components_.front().mean.size());
  if (dim_ == 0) throw std::invalid_argument("gmm: zero-dimensional mean");
  double total = 0.0;
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const auto& c = components_[j];
    if (!(c.weight > 0.0)) throw std::invalid_argument("gmm: weights must be positive");
    total += c.weight;
    if (static_cast<std::size_t>(c.mean.size()) != dim_ ||
        static_cast<std::size_t>(c.cov.rows()) != dim_ ||
        static_cast<std::size_t>(c.cov.cols()) != dim_) {
      throw std::invalid_argument("gmm: component " + std::to_string(j) + " has wrong dimension");
    }
    if (!c.cov.isApprox(c.cov.transpose(), 1e-12)) {
      throw std::invalid_argument("gmm: covariance " + std::to_string(j) + " is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("gmm: covariance " + std::to_string(j) +
                                  " is not positive definite");
    }
    chol_l_.push_back(llt.matrixL());
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "gmm: weights sum to " << total << ", expected 1";
    throw std::invalid_argument(os.str());
  }
}

GaussianMixture::Diffused GaussianMixture::diffused(double sigma) const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gmm: noise level must be finite and >= 0");
  }
  Diffused d;
  const auto eye = Eigen::MatrixXd::Identity(dim_, dim_);
  for (const auto& c : components_) {
    Eigen::LLT<Eigen::MatrixXd> llt(c.cov + sigma * sigma * eye);
    if (llt.info() != Eigen::Success) throw std::domain_error("gmm: degenerate covariance");
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    d.log_norm.push_back(std::log(c.weight) -
                         0.5 * (static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) +
                                log_det));
    d.chol.push_back(std::move(llt));
  }
  return d;
}

Eigen::VectorXd GaussianMixture::log_joint(const Eigen::VectorXd& x, const Diffused& d) const {
  Eigen::VectorXd out(components_.size());
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const Eigen::VectorXd diff = x - components_[j].mean;
    const Eigen::VectorXd z = d.chol[j].matrixL().solve(diff);
    out[j] = d.log_norm[j] - 0.5 * z.squaredNorm();
  }
  return out;
}

double GaussianMixture::log_density(const Eigen::VectorXd& x, double sigma) const {
  return log_sum_exp(log_joint(x, diffused(sigma)));
}

double GaussianMixture::density(const Eigen::VectorXd& x, double sigma) const {
  return std::exp(log_density(x, sigma));
}

Eigen::VectorXd GaussianMixture::responsibilities(const Eigen::VectorXd& x, double sigma) const {
  const Eigen::VectorXd lj = log_joint(x, diffused(sigma));
  const double lse = log_sum_exp(lj);
  return (lj.array() - lse).exp();
}

Eigen::VectorXd GaussianMixture::score(const Eigen::VectorXd& x, double sigma) const {
  const Diffused d = diffused(sigma);
  const Eigen::VectorXd lj = log_joint(x, d);
  const double lse = log_sum_exp(lj);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  for (std::size_t j = 0; j < components_.size(); ++j) {
    const double r = std::exp(lj[j] - lse);
    out += r * d.chol[j].solve(components_[j].mean - x);
  }
  return out;
}

Eigen::VectorXd GaussianMixture::denoise(const Eigen::VectorXd& x, double sigma) const {
  return x + sigma * sigma * score(x, sigma);
}

Samples GaussianMixture::score(const Samples& x, double sigma) const {
  const Diffused d = diffused(sigma);
  Samples out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd xi = x.row(i).transpose();
    const Eigen::VectorXd lj = log_joint(xi, d);
    const double lse = log_sum_exp(lj);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(dim_);
    for (std::size_t j = 0; j < components_.size(); ++j) {
      s += std::exp(lj[j] - lse) * d.chol[j].solve(components_[j].mean - xi);
    }
    out.row(i) = s.transpose();
  }
  return out;
}

Samples GaussianMixture::denoise(const Samples& x, double sigma) const {
  return x + sigma * sigma * score(x, sigma);
}

Samples GaussianMixture::denoise(const Samples& x, std::span<const double> sigma) const {
  if (static_cast<Eigen::Index>(sigma.size()) != x.rows()) {
    throw std::invalid_argument("gmm: one noise level per row required");
  }
  Samples out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double s = sigma[i];
    out.row(i) = denoise(Eigen::VectorXd(x.row(i).transpose()), s).transpose();
  }
  return out;
}

Samples GaussianMixture::sample(std::size_t n, Rng& rng) const {
  return sample_diffused(n, 0.0, rng);
}

Samples GaussianMixture::sample_diffused(std::size_t n, double sigma, Rng& rng) const {
  std::vector<double> w;
  for (const auto& c : components_) w.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::normal_distribution<double> normal;
  Samples out(n, dim_);
  Eigen::VectorXd z(dim_);
  Eigen::VectorXd e(dim_);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = pick(rng);
    for (std::size_t k = 0; k < dim_; ++k) z[k] = normal(rng);
    for (std::size_t k = 0; k < dim_; ++k) e[k] = normal(rng);
    out.row(i) = (components_[j].mean + chol_l_[j] * z + sigma * e).transpose();
  }
  return out;
}

Eigen::VectorXd GaussianMixture::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim_);
  for (const auto& c : components_) m += c.weight * c.mean;
  return m;
}

Eigen::MatrixXd GaussianMixture::covariance() const {
  const Eigen::VectorXd mu = mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim_, dim_);
  for (const auto& c : components_) {
    const Eigen::VectorXd d = c.mean - mu;
    cov += c.weight * (c.cov + d * d.transpose());
  }
  return cov;
}

double GaussianMixture::data_std() const {
  return std::sqrt(covariance().diagonal().maxCoeff());
}

double GaussianMixture::component_std(std::size_t j) const {
  return std::sqrt(components_.at(j).cov.trace() / static_cast<double>(dim_));
}

GaussianComponent isotropic(double weight, Eigen::VectorXd mean, double std) {
  const auto d = mean.size();
  return {weight, std::move(mean), std * std * Eigen::MatrixXd::Identity(d, d)};
}

namespace presets {

GaussianMixture ring8() {
  std::vector<GaussianComponent> c;
  for (int j = 0; j < 8; ++j) {
    const double a = 2.0 * std::numbers::pi * j / 8.0;
    c.push_back(isotropic(1.0 / 8.0, Eigen::Vector2d(2.0 * std::cos(a), 2.0 * std::sin(a)), 0.25));
  }
  return GaussianMixture(std::move(c));
}

GaussianMixture grid25() {
  std::vector<GaussianComponent> c;
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) c.push_back(isotropic(1.0 / 25.0, Eigen::Vector2d(i, j), 0.15));
  }
  return GaussianMixture(std::move(c));
}

GaussianMixture two_moons_gmm() {
  std::vector<GaussianComponent> c;
  const int per_moon = 8;
  for (int k = 0; k < per_moon; ++k) {
    const double a = std::numbers::pi * k / (per_moon - 1);
    const Eigen::Vector2d upper(std::cos(a) - 0.5, std::sin(a) - 0.25);
    const Eigen::Vector2d lower(1.0 - std::cos(a) - 0.5, 0.5 - std::sin(a) - 0.25);
    c.push_back(isotropic(1.0 / (2 * per_moon), 1.5 * upper, 0.12));
    c.push_back(isotropic(1.0 / (2 * per_moon), 1.5 * lower, 0.12));
  }
  return GaussianMixture(std::move(c));
}

GaussianMixture single_gauss() {
  return GaussianMixture({isotropic(1.0, Eigen::Vector2d::Zero(), 1.0)});
}

std::vector<std::string> names() { return {"two-moons-gmm", "ring8", "grid25", "single-gauss"}; }

GaussianMixture by_name(const std::string& name) {
  if (name == "ring8") return ring8();
  if (name == "grid25") return grid25();
  if (name == "two-moons-gmm") return two_moons_gmm();
  if (name == "single-gauss") return single_gauss();
  std::string avail;
  for (const auto& n : names()) avail += (avail.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown dataset preset '" + name + "' (available: " + avail + ")");
}

}  // namespace presets

Eigen::VectorXd analytic_score(const GaussianMixture& gmm, const Eigen::VectorXd& x, double t,
                               const NoiseSchedule& schedule) {
  schedule.check_time(t);
  return gmm.score(x, schedule.sigma(t));
}

Eigen::VectorXd analytic_denoiser(const GaussianMixture& gmm, const Eigen::VectorXd& x, double t,
                                  const NoiseSchedule& schedule) {
  schedule.check_time(t);
  if (t == 0.0) return x;
  return gmm.denoise(x, schedule.sigma(t));
}

ad::Tensor diffuse(const ad::Tensor& x, double t, const ad::Tensor& eps,
                   const NoiseSchedule& schedule) {
  schedule.check_time(t);
  return ad::add(x, ad::scale(eps, schedule.sigma(t)));
}

Eigen::VectorXd score_from_denoiser(const Eigen::VectorXd& f_out, const Eigen::VectorXd& x_t,
                                    double t, const NoiseSchedule& schedule) {
  const double s = schedule.sigma(t);
  if (!(s > 0.0)) throw std::invalid_argument("score_from_denoiser: requires t > 0");
  return -(x_t - f_out) / (s * s);
}

Samples score_from_denoiser(const Samples& f_out, const Samples& x_t, double t,
                            const NoiseSchedule& schedule) {
  const double s = schedule.sigma(t);
  if (!(s > 0.0)) throw std::invalid_argument("score_from_denoiser: requires t > 0");
  return -(x_t - f_out) / (s * s);
}

}  // namespace tdm
