#include "tdm/optim.hpp"

#include <cmath>
#include <iostream>

namespace tdm::optim {

double global_norm(const std::vector<ad::Tensor>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

std::vector<std::vector<double>> clip_by_global_norm(const std::vector<ad::Tensor>& grads,
                                                     double clip_norm, double* factor_out) {
  const double norm = global_norm(grads);
  double factor = 1.0;
  if (clip_norm > 0.0 && norm > clip_norm) factor = clip_norm / norm;
  std::vector<std::vector<double>> out;
  out.reserve(grads.size());
  for (const auto& g : grads) {
    std::vector<double> v(g.data().begin(), g.data().end());
    if (factor != 1.0) {
      for (double& x : v) x *= factor;
    }
    out.push_back(std::move(v));
  }
  if (factor_out) *factor_out = factor;
  return out;
}

AdamW::AdamW(AdamWConfig config, const std::vector<ad::Tensor>& params) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

StepReport AdamW::step(std::vector<ad::Tensor>& params, const std::vector<ad::Tensor>& grads) {
  if (params.size() != grads.size() || params.size() != m_.size()) {
    throw std::invalid_argument("adamw: parameter/gradient count mismatch");
  }
  StepReport report;
  report.grad_norm = global_norm(grads);
  if (!std::isfinite(report.grad_norm)) {
    ++skipped_;
    std::cerr << "[adamw] non-finite gradient at step " << step_ + 1 << ", update skipped\n";
    return report;
  }
  auto clipped = clip_by_global_norm(grads, config_.clip_norm, &report.clip_factor);

  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].numel() != clipped[k].size()) {
      throw std::invalid_argument("adamw: gradient shape does not match parameter");
    }
    std::vector<double> p(params[k].data().begin(), params[k].data().end());
    auto& m = m_[k];
    auto& v = v_[k];
    const auto& g = clipped[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= config_.lr * config_.weight_decay * p[i];
      p[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
    params[k] = ad::Tensor::from(params[k].shape(), std::move(p), params[k].requires_grad());
  }
  report.applied = true;
  return report;
}

}  // namespace tdm::optim
