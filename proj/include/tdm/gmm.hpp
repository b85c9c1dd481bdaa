#pragma once

// Gaussian-mixture data densities with closed-form diffused marginals.
//
// Diffusing p_d by q(x_t | x) = N(x, sigma^2 I) keeps it a mixture with
// covariances Sigma_j + sigma^2 I, so densities, scores and posterior means are
// available exactly at every noise level.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "tdm/schedule.hpp"
#include "tdm/types.hpp"

namespace tdm {

struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

class GaussianMixture {
 public:
  GaussianMixture() = default;
  /// Throws std::invalid_argument unless weights are positive and sum to 1
  /// within 1e-12, dimensions agree and every covariance is SPD.
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const std::vector<GaussianComponent>& components() const { return components_; }

  double log_density(const Eigen::VectorXd& x, double sigma) const;
  double density(const Eigen::VectorXd& x, double sigma) const;
  /// grad_x log p_sigma(x).
  Eigen::VectorXd score(const Eigen::VectorXd& x, double sigma) const;
  /// E[x0 | x_sigma = x] (Tweedie).
  Eigen::VectorXd denoise(const Eigen::VectorXd& x, double sigma) const;
  /// Posterior component responsibilities at noise level sigma.
  Eigen::VectorXd responsibilities(const Eigen::VectorXd& x, double sigma) const;

  Samples score(const Samples& x, double sigma) const;
  Samples denoise(const Samples& x, double sigma) const;
  /// Row-wise noise levels.
  Samples denoise(const Samples& x, std::span<const double> sigma) const;

  Samples sample(std::size_t n, Rng& rng) const;
  /// Exact draws from the diffused marginal p_sigma.
  Samples sample_diffused(std::size_t n, double sigma, Rng& rng) const;

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;
  /// sqrt of the largest per-coordinate variance.
  double data_std() const;
  /// sqrt(trace(Sigma_j) / d) for component j.
  double component_std(std::size_t j) const;

 private:
  struct Diffused {
    std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;
    std::vector<double> log_norm;  // log w_j - 0.5 log det(2 pi Sigma~_j)
  };
  Diffused diffused(double sigma) const;
  Eigen::VectorXd log_joint(const Eigen::VectorXd& x, const Diffused& d) const;

  std::vector<GaussianComponent> components_;
  std::vector<Eigen::MatrixXd> chol_l_;  // Cholesky factors of the clean covariances
  std::size_t dim_ = 0;
};

/// Isotropic component helper.
GaussianComponent isotropic(double weight, Eigen::VectorXd mean, double std);

namespace presets {
/// Eight equal modes on a circle of radius 2, component std 0.25.
GaussianMixture ring8();
/// 5 x 5 lattice on {-2..2}^2, component std 0.15.
GaussianMixture grid25();
/// Two interleaved half-moons approximated by 16 isotropic components.
GaussianMixture two_moons_gmm();
/// Standard normal in 2-D.
GaussianMixture single_gauss();

std::vector<std::string> names();
/// Throws std::invalid_argument naming the available presets.
GaussianMixture by_name(const std::string& name);
}  // namespace presets

// Schedule-aware wrappers.
Eigen::VectorXd analytic_score(const GaussianMixture& gmm, const Eigen::VectorXd& x, double t,
                               const NoiseSchedule& schedule);
Eigen::VectorXd analytic_denoiser(const GaussianMixture& gmm, const Eigen::VectorXd& x, double t,
                                  const NoiseSchedule& schedule);

/// x + sigma(t) * eps.
ad::Tensor diffuse(const ad::Tensor& x, double t, const ad::Tensor& eps,
                   const NoiseSchedule& schedule);

/// -(x_t - f_out) / sigma(t)^2. Throws for t = 0.
Eigen::VectorXd score_from_denoiser(const Eigen::VectorXd& f_out, const Eigen::VectorXd& x_t,
                                    double t, const NoiseSchedule& schedule);
Samples score_from_denoiser(const Samples& f_out, const Samples& x_t, double t,
                            const NoiseSchedule& schedule);

}  // namespace tdm
