#pragma once

// Revised targets and the generator objectives built on them.

#include <cstddef>
#include <string>

#include "tdm/autodiff.hpp"

namespace tdm {

/// How the score difference is scaled before it is added to x_ti.
enum class LambdaRule {
  sigma2,    // lambda_tau = sigma_tau^2: correction = f_real - f_fake
  dmd_norm,  // sigma2, then divided by the per-sample mean |f_real - f_fake|
};

std::string to_string(LambdaRule rule);
LambdaRule lambda_rule_from_string(const std::string& name);

/// 0.00054 * sqrt(d).
double default_huber_c(std::size_t dim);

/// x_ti + correction, with no gradient path. `f_real` and `f_fake` are
/// denoiser outputs at the same (x_tau, tau).
ad::Tensor revised_target(const ad::Tensor& x_ti, const ad::Tensor& f_real,
                          const ad::Tensor& f_fake, LambdaRule rule = LambdaRule::sigma2);

/// Batch mean of ||x - x_rev||^2. Throws std::invalid_argument if x_rev
/// carries a gradient.
ad::Tensor generator_loss_l2(const ad::Tensor& x, const ad::Tensor& x_rev);

/// Batch mean of sqrt(||x - x_rev||^2 + c^2) - c. Throws for c <= 0 or a
/// gradient-carrying x_rev.
ad::Tensor generator_loss_huber(const ad::Tensor& x, const ad::Tensor& x_rev, double c);

}  // namespace tdm
