#include "tdm/generator_loss.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace tdm {

std::string to_string(LambdaRule rule) {
  return rule == LambdaRule::sigma2 ? "sigma2" : "dmd-norm";
}

LambdaRule lambda_rule_from_string(const std::string& name) {
  if (name == "sigma2") return LambdaRule::sigma2;
  if (name == "dmd-norm") return LambdaRule::dmd_norm;
  throw std::invalid_argument("unknown lambda rule '" + name + "' (available: sigma2, dmd-norm)");
}

double default_huber_c(std::size_t dim) { return 0.00054 * std::sqrt(static_cast<double>(dim)); }

ad::Tensor revised_target(const ad::Tensor& x_ti, const ad::Tensor& f_real,
                          const ad::Tensor& f_fake, LambdaRule rule) {
  if (x_ti.shape() != f_real.shape() || x_ti.shape() != f_fake.shape()) {
    throw ad::ShapeError("revised_target: shape mismatch");
  }
  const std::size_t n = x_ti.rows();
  const std::size_t d = x_ti.cols();
  auto x = x_ti.data();
  auto a = f_real.data();
  auto b = f_fake.data();
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t r = 0; r < n; ++r) {
    double scale = 1.0;
    if (rule == LambdaRule::dmd_norm) {
      double mean_abs = 0.0;
      for (std::size_t c = 0; c < d; ++c) mean_abs += std::abs(a[r * d + c] - b[r * d + c]);
      mean_abs /= static_cast<double>(d);
      // a zero difference stays a zero correction
      scale = mean_abs > 0.0 ? 1.0 / mean_abs : 0.0;
    }
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] += scale * (a[r * d + c] - b[r * d + c]);
  }
  return ad::Tensor::from(x_ti.shape(), std::move(out));
}

namespace {

ad::Tensor residual_sq(const ad::Tensor& x, const ad::Tensor& x_rev, const char* who) {
  if (x_rev.requires_grad()) {
    throw std::invalid_argument(std::string(who) + ": revised target must be gradient-frozen");
  }
  return ad::row_sum(ad::square(ad::sub(x, x_rev)));
}

}  // namespace

ad::Tensor generator_loss_l2(const ad::Tensor& x, const ad::Tensor& x_rev) {
  return ad::mean(residual_sq(x, x_rev, "generator_loss_l2"));
}

ad::Tensor generator_loss_huber(const ad::Tensor& x, const ad::Tensor& x_rev, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("generator_loss_huber: c must be > 0");
  ad::Tensor r2 = residual_sq(x, x_rev, "generator_loss_huber");
  return ad::mean(ad::add_scalar(ad::sqrt(ad::add_scalar(r2, c * c)), -c));
}

}  // namespace tdm
