#pragma once

#include <cstdint>
#include <vector>

#include "tdm/autodiff.hpp"

namespace tdm::optim {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 1.0;
};

struct StepReport {
  bool applied = false;
  double grad_norm = 0.0;     // before clipping
  double clip_factor = 1.0;   // multiplier applied to every gradient
};

/// Global L2 norm over a set of gradient tensors.
double global_norm(const std::vector<ad::Tensor>& grads);

/// Scales `grads` so their global norm is at most `clip_norm`.
std::vector<std::vector<double>> clip_by_global_norm(const std::vector<ad::Tensor>& grads,
                                                     double clip_norm, double* factor_out = nullptr);

/// Decoupled-weight-decay Adam with global-norm clipping.
///
/// A step with any non-finite gradient entry is skipped: parameters, moments
/// and the step counter stay untouched and the event is reported to stderr.
class AdamW {
 public:
  AdamW() = default;
  AdamW(AdamWConfig config, const std::vector<ad::Tensor>& params);

  /// Replaces `params` with updated leaves (requires_grad preserved).
  StepReport step(std::vector<ad::Tensor>& params, const std::vector<ad::Tensor>& grads);

  std::int64_t steps() const { return step_; }
  std::int64_t skipped() const { return skipped_; }
  const AdamWConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  AdamWConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t step_ = 0;
  std::int64_t skipped_ = 0;
};

}  // namespace tdm::optim
