#include <cmath>
#include <limits>

#include "doctest.h"
#include "tdm/optim.hpp"

using namespace tdm;
using tdm::ad::Tensor;

TEST_SUITE("optim") {

TEST_CASE("global norm and clipping") {
  std::vector<Tensor> g{Tensor::from({2}, {3.0, 0.0}), Tensor::from({1}, {4.0})};
  CHECK(optim::global_norm(g) == doctest::Approx(5.0));
  double factor = 0.0;
  auto c = optim::clip_by_global_norm(g, 1.0, &factor);
  CHECK(factor == doctest::Approx(0.2));
  CHECK(c[0][0] == doctest::Approx(0.6));
  CHECK(c[1][0] == doctest::Approx(0.8));
  auto same = optim::clip_by_global_norm(g, 10.0, &factor);
  CHECK(factor == 1.0);
  CHECK(same[1][0] == 4.0);
}

TEST_CASE("two steps against a hand-computed Adam recursion") {
  optim::AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.beta1 = 0.5;
  cfg.beta2 = 0.9;
  cfg.eps = 0.0;
  cfg.clip_norm = 0.0;
  cfg.weight_decay = 0.01;
  std::vector<Tensor> p{Tensor::from({1}, {1.0}, true)};
  optim::AdamW opt(cfg, p);

  double x = 1.0, m = 0.0, v = 0.0;
  const double grads[2] = {0.4, -0.2};
  for (int t = 1; t <= 2; ++t) {
    const double g = grads[t - 1];
    opt.step(p, {Tensor::from({1}, {g})});
    m = 0.5 * m + 0.5 * g;
    v = 0.9 * v + 0.1 * g * g;
    x -= 0.1 * 0.01 * x;
    x -= 0.1 * (m / (1 - std::pow(0.5, t))) / std::sqrt(v / (1 - std::pow(0.9, t)));
    CHECK(p[0].data()[0] == doctest::Approx(x).epsilon(1e-14));
  }
  CHECK(p[0].requires_grad());
  CHECK(opt.steps() == 2);
}

TEST_CASE("beta1 = 0 makes the first step a signed lr step") {
  optim::AdamWConfig cfg;
  cfg.lr = 1e-2;
  std::vector<Tensor> p{Tensor::from({3}, {0.0, 0.0, 0.0}, true)};
  optim::AdamW opt(cfg, p);
  opt.step(p, {Tensor::from({3}, {0.3, -0.2, 0.1})});
  CHECK(p[0].data()[0] == doctest::Approx(-1e-2).epsilon(1e-6));
  CHECK(p[0].data()[1] == doctest::Approx(1e-2).epsilon(1e-6));
  CHECK(p[0].data()[2] == doctest::Approx(-1e-2).epsilon(1e-6));
}

TEST_CASE("non-finite gradients skip the step") {
  // Tensors are finite by construction; a gradient norm can still overflow.
  CHECK_THROWS_AS(Tensor::from({1}, {std::numeric_limits<double>::quiet_NaN()}), ad::NonFiniteError);
  std::vector<Tensor> p{Tensor::from({2}, {1.0, 2.0}, true)};
  optim::AdamW opt({}, p);
  auto rep = opt.step(p, {Tensor::from({2}, {1e200, 1e200})});
  CHECK_FALSE(std::isfinite(rep.grad_norm));
  CHECK_FALSE(rep.applied);
  CHECK(opt.skipped() == 1);
  CHECK(opt.steps() == 0);
  CHECK(p[0].data()[0] == 1.0);
  CHECK(opt.first_moment()[0][1] == 0.0);
}

TEST_CASE("mismatched gradient lists are rejected") {
  std::vector<Tensor> p{Tensor::from({2}, {1.0, 2.0}, true)};
  optim::AdamW opt({}, p);
  CHECK_THROWS_AS(opt.step(p, {}), std::invalid_argument);
  CHECK_THROWS_AS(opt.step(p, {Tensor::from({3}, {1.0, 1.0, 1.0})}), std::invalid_argument);
}

}  // TEST_SUITE
