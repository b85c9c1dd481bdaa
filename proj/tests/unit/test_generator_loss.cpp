#include <cmath>
#include <random>

#include "doctest.h"
#include "tdm/generator_loss.hpp"
#include "tdm/gmm.hpp"

using namespace tdm;
using tdm::ad::Tensor;

namespace {

Tensor random_matrix(std::size_t n, std::size_t d, std::uint64_t seed, double scale,
                     bool requires_grad = false) {
  Rng rng(seed);
  Samples s = standard_normal(n, d, rng) * scale;
  return to_tensor(s, requires_grad);
}

}  // namespace

TEST_SUITE("generator_loss") {

TEST_CASE("revised target examples") {
  auto x = Tensor::matrix(2, 2, {1.0, 2.0, -1.0, 0.5});
  auto f = Tensor::matrix(2, 2, {0.3, 0.3, 0.1, -0.2});
  auto same = revised_target(x, f, f);
  for (std::size_t i = 0; i < 4; ++i) CHECK(same.data()[i] == x.data()[i]);

  // sigma = 2, s_real - s_fake = 0.25: lambda = 4, so the denoisers differ by 1.
  auto fr = Tensor::matrix(1, 1, {1.25});
  auto ff = Tensor::matrix(1, 1, {0.25});
  auto x1 = Tensor::matrix(1, 1, {3.0});
  CHECK(revised_target(x1, fr, ff).item() - 3.0 == doctest::Approx(1.0));

  auto fr2 = Tensor::matrix(1, 2, {1.0, -3.0});
  auto ff2 = Tensor::matrix(1, 2, {0.0, 0.0});
  auto xz = Tensor::matrix(1, 2, {0.0, 0.0});
  auto dn = revised_target(xz, fr2, ff2, LambdaRule::dmd_norm);
  CHECK(dn.data()[0] == doctest::Approx(0.5));
  CHECK(dn.data()[1] == doctest::Approx(-1.5));
  auto dz = revised_target(xz, ff2, ff2, LambdaRule::dmd_norm);
  CHECK(dz.data()[0] == 0.0);

  auto xg = x.with_requires_grad(true);
  CHECK_FALSE(revised_target(xg, f.with_requires_grad(true), f).requires_grad());
  CHECK(lambda_rule_from_string("dmd-norm") == LambdaRule::dmd_norm);
  CHECK_THROWS_AS(lambda_rule_from_string("sigma"), std::invalid_argument);
}

TEST_CASE("l2 loss gradient is 2 (x - x_rev) per sample") {
  const std::size_t n = 5, d = 3;
  auto x = random_matrix(n, d, 1, 1.0, true);
  auto xr = random_matrix(n, d, 2, 1.0);
  ad::Tape tape;
  auto loss = generator_loss_l2(x, xr);
  auto g = tape.backward(loss).of(x);
  for (std::size_t i = 0; i < n * d; ++i) {
    CHECK(std::abs(n * g.data()[i] - 2 * (x.data()[i] - xr.data()[i])) < 1e-12);
  }
  CHECK(generator_loss_l2(xr, xr).item() == 0.0);
  CHECK_THROWS_AS(generator_loss_l2(x, x), std::invalid_argument);
}

TEST_CASE("scaling the correction scales the gradient exactly") {
  auto x = random_matrix(4, 2, 3, 1.0, true);
  auto fr = random_matrix(4, 2, 4, 0.3);
  auto ff = random_matrix(4, 2, 5, 0.3);
  auto grad_for = [&](double c) {
    auto xr = revised_target(ad::detach(x), ad::scale(fr, c), ad::scale(ff, c));
    ad::Tape tape;
    return tape.backward(generator_loss_l2(x, xr)).of(x);
  };
  auto g1 = grad_for(1.0), g3 = grad_for(3.0);
  for (std::size_t i = 0; i < 8; ++i) CHECK(g3.data()[i] == doctest::Approx(3 * g1.data()[i]).epsilon(1e-12));
}

TEST_CASE("Pseudo-Huber contract") {
  CHECK(default_huber_c(2) == doctest::Approx(7.637e-4).epsilon(1e-3));
  CHECK(default_huber_c(1) == 0.00054);
  const double c = default_huber_c(2);

  auto z = random_matrix(6, 2, 7, 1.0);
  CHECK(generator_loss_huber(z, z, c).item() == 0.0);
  CHECK_THROWS_AS(generator_loss_huber(z, z, 0.0), std::invalid_argument);

  const std::size_t n = 200;
  for (double scale : {1e-5, 1e-3, 1.0, 1e3}) {
    auto x = random_matrix(n, 2, 8, scale, true);
    auto xr = random_matrix(n, 2, 9, scale);
    ad::Tape t1;
    auto gh = t1.backward(generator_loss_huber(x, xr, c)).of(x);
    ad::Tape t2;
    auto gl = t2.backward(generator_loss_l2(x, xr)).of(x);
    double min_norm = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      Eigen::Vector2d a(n * gh.at(r, 0), n * gh.at(r, 1));
      Eigen::Vector2d b(n * gl.at(r, 0), n * gl.at(r, 1));
      const Eigen::Vector2d res(x.at(r, 0) - xr.at(r, 0), x.at(r, 1) - xr.at(r, 1));
      CHECK(a.norm() < 1.0);
      CHECK((a - res / std::sqrt(res.squaredNorm() + c * c)).norm() < 1e-12);
      CHECK(a.dot(b) / (a.norm() * b.norm()) == doctest::Approx(1.0).epsilon(1e-10));
      min_norm = std::min(min_norm, a.norm());
    }
    if (scale >= 1.0) CHECK(min_norm > 0.99);
  }
}

TEST_CASE("one generator step raises the teacher log-density on a Gaussian landscape") {
  // Teacher N(0, I); student states distributed as N(m, I).
  const Eigen::Vector2d m(2.0, -1.0);
  GaussianMixture teacher({isotropic(1.0, Eigen::Vector2d::Zero(), 1.0)});
  GaussianMixture fake({isotropic(1.0, m, 1.0)});
  Rng rng(12);
  const std::size_t n = 512;
  Samples x = standard_normal(n, 2, rng).rowwise() + m.transpose();
  const double sigma_ti = 0.5, sigma_tau = 0.8;
  const Samples x_tau = x + std::sqrt(sigma_tau * sigma_tau - sigma_ti * sigma_ti) * standard_normal(n, 2, rng);
  auto xt = to_tensor(x, true);
  auto xr = revised_target(ad::detach(xt), to_tensor(teacher.denoise(x_tau, sigma_tau)),
                           to_tensor(fake.denoise(x_tau, sigma_tau)));
  ad::Tape tape;
  auto g = to_samples(tape.backward(generator_loss_l2(xt, xr)).of(xt));
  const Samples moved = x - 0.05 * static_cast<double>(n) * g;
  double before = 0, after = 0;
  for (std::size_t r = 0; r < n; ++r) {
    before += teacher.log_density(x.row(r).transpose(), sigma_ti);
    after += teacher.log_density(moved.row(r).transpose(), sigma_ti);
  }
  CHECK(after > before);
}

}  // TEST_SUITE
