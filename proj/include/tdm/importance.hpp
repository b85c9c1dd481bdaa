#pragma once

// Proposal draws around trajectory points and their importance weights.
//
// The fake score should regress onto x̂ under q(x_tau | x̂) = N(x̂, sigma_tau^2 I),
// but draws are taken from q(x_tau | x_ti) = N(x_ti, (sigma_tau^2 - sigma_ti^2) I)
// so they stay close to the student's own sampler states. The density ratio
// restores the original expectation.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "tdm/schedule.hpp"
#include "tdm/types.hpp"

namespace tdm {

inline constexpr double kDefaultImportanceClip = 10.0;

struct ImportanceWeight {
  std::vector<double> value;  // clipped weights, one per row
  std::vector<double> log_raw;
  std::size_t clipped = 0;

  double mean() const;
  double max() const;
  double min() const;
};

struct ProposalDraw {
  Samples x_tau;
  ImportanceWeight weight;
};

/// log N(x_tau; x_hat, sigma_tau^2 I) - log N(x_tau; x_ti, (sigma_tau^2 - sigma_ti^2) I).
/// Throws std::invalid_argument unless sigma_tau > sigma_ti >= 0.
double importance_log_weight(const Eigen::VectorXd& x_tau, const Eigen::VectorXd& x_hat,
                             const Eigen::VectorXd& x_ti, double sigma_ti, double sigma_tau);

/// One proposal draw per row at per-row times tau. With `use_weights` false
/// the weights are all 1 but the draws are unchanged.
ProposalDraw diffuse_from_trajectory(const Samples& x_ti, const Samples& x_hat, double t_i,
                                     std::span<const double> tau, const NoiseSchedule& schedule,
                                     Rng& rng, double clip = kDefaultImportanceClip,
                                     bool use_weights = true);

/// Direct draws x_hat + sigma_tau * eps with unit weights (clean-sample matching).
ProposalDraw diffuse_from_clean(const Samples& x_hat, std::span<const double> tau,
                                const NoiseSchedule& schedule, Rng& rng);

}  // namespace tdm
