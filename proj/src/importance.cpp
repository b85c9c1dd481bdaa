#include "tdm/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tdm {

double ImportanceWeight::mean() const {
  if (value.empty()) return 0.0;
  return std::accumulate(value.begin(), value.end(), 0.0) / static_cast<double>(value.size());
}

double ImportanceWeight::max() const {
  return value.empty() ? 0.0 : *std::max_element(value.begin(), value.end());
}

double ImportanceWeight::min() const {
  return value.empty() ? 0.0 : *std::min_element(value.begin(), value.end());
}

namespace {

void check_sigmas(double sigma_ti, double sigma_tau) {
  if (!(sigma_ti >= 0.0) || !(sigma_tau > sigma_ti)) {
    throw std::invalid_argument("importance weight: requires sigma_tau > sigma_ti >= 0");
  }
}

// The normalizers differ only through the two variances.
double log_ratio(const Eigen::Ref<const Eigen::RowVectorXd>& x_tau,
                 const Eigen::Ref<const Eigen::RowVectorXd>& x_hat,
                 const Eigen::Ref<const Eigen::RowVectorXd>& x_ti, double sigma_ti,
                 double sigma_tau) {
  const double var_target = sigma_tau * sigma_tau;
  const double var_prop = var_target - sigma_ti * sigma_ti;
  const double d = static_cast<double>(x_tau.size());
  const double quad_target = (x_tau - x_hat).squaredNorm() / var_target;
  const double quad_prop = (x_tau - x_ti).squaredNorm() / var_prop;
  return -0.5 * (quad_target - quad_prop) - 0.5 * d * std::log(var_target / var_prop);
}

}  // namespace

double importance_log_weight(const Eigen::VectorXd& x_tau, const Eigen::VectorXd& x_hat,
                             const Eigen::VectorXd& x_ti, double sigma_ti, double sigma_tau) {
  check_sigmas(sigma_ti, sigma_tau);
  if (x_hat.size() != x_tau.size() || x_ti.size() != x_tau.size()) {
    throw std::invalid_argument("importance weight: dimension mismatch");
  }
  return log_ratio(x_tau.transpose(), x_hat.transpose(), x_ti.transpose(), sigma_ti, sigma_tau);
}

ProposalDraw diffuse_from_trajectory(const Samples& x_ti, const Samples& x_hat, double t_i,
                                     std::span<const double> tau, const NoiseSchedule& schedule,
                                     Rng& rng, double clip, bool use_weights) {
  if (x_ti.rows() != x_hat.rows() || x_ti.cols() != x_hat.cols()) {
    throw std::invalid_argument("diffuse_from_trajectory: x_ti and x_hat shapes differ");
  }
  if (tau.size() != static_cast<std::size_t>(x_ti.rows())) {
    throw std::invalid_argument("diffuse_from_trajectory: one tau per row required");
  }
  if (!(clip >= 1.0)) throw std::invalid_argument("diffuse_from_trajectory: clip must be >= 1");
  const double sigma_ti = schedule.sigma(t_i);
  const Samples eps = standard_normal(x_ti.rows(), x_ti.cols(), rng);

  ProposalDraw out;
  out.x_tau.resize(x_ti.rows(), x_ti.cols());
  out.weight.value.resize(tau.size());
  out.weight.log_raw.resize(tau.size());
  const double log_clip = std::log(clip);
  for (Eigen::Index r = 0; r < x_ti.rows(); ++r) {
    const double sigma_tau = schedule.sigma(tau[r]);
    check_sigmas(sigma_ti, sigma_tau);
    const double spread = std::sqrt(sigma_tau * sigma_tau - sigma_ti * sigma_ti);
    out.x_tau.row(r) = x_ti.row(r) + spread * eps.row(r);
    const double lw = log_ratio(out.x_tau.row(r), x_hat.row(r), x_ti.row(r), sigma_ti, sigma_tau);
    out.weight.log_raw[r] = lw;
    if (!use_weights) {
      out.weight.value[r] = 1.0;
    } else if (lw > log_clip) {
      out.weight.value[r] = clip;
      ++out.weight.clipped;
    } else {
      out.weight.value[r] = std::exp(lw);
    }
  }
  return out;
}

ProposalDraw diffuse_from_clean(const Samples& x_hat, std::span<const double> tau,
                                const NoiseSchedule& schedule, Rng& rng) {
  if (tau.size() != static_cast<std::size_t>(x_hat.rows())) {
    throw std::invalid_argument("diffuse_from_clean: one tau per row required");
  }
  const Samples eps = standard_normal(x_hat.rows(), x_hat.cols(), rng);
  ProposalDraw out;
  out.x_tau.resize(x_hat.rows(), x_hat.cols());
  out.weight.value.assign(tau.size(), 1.0);
  out.weight.log_raw.assign(tau.size(), 0.0);
  for (Eigen::Index r = 0; r < x_hat.rows(); ++r) {
    out.x_tau.row(r) = x_hat.row(r) + schedule.sigma(tau[r]) * eps.row(r);
  }
  return out;
}

}  // namespace tdm
