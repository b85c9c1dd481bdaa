#include <cmath>

#include "doctest.h"
#include "tdm/gmm.hpp"
#include "tdm/partition.hpp"
#include "tdm/sampler.hpp"
#include "tdm/teacher.hpp"

using namespace tdm;

namespace {

// Max |x_0 - exact| over a batch of starting points for N uniform steps.
double ode_error(Solver solver, int steps) {
  const double std = 1.0, T = 10.0;  // unit-scale data, sigma(T) = 10 std
  NoiseSchedule sch(T);
  GaussianMixture g({isotropic(1.0, Eigen::Vector2d::Zero(), std)});
  std::vector<double> start{-12.0, -3.0, 0.5, 7.0, 15.0, 2.0};
  auto x_T = ad::Tensor::matrix(3, 2, start);
  const auto x0 = solve_ode(x_T, steps, solver, sch, as_denoiser(g));
  double err = 0.0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    err = std::max(err, std::abs(x0.data()[i] - exact_gaussian_ode_map(start[i], std, T)));
  }
  return err;
}

double fitted_order(Solver solver) {
  // Least-squares slope of log error against log h over N = 8..64.
  std::vector<double> lx, ly;
  for (int n : {8, 16, 32, 64}) {
    lx.push_back(std::log(1.0 / n));
    ly.push_back(std::log(ode_error(solver, n)));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
  double num = 0, den = 0;
  for (int i = 0; i < 4; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return num / den;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("partition boundaries") {
  auto p = partition(4, 1.0);
  REQUIRE(p.boundaries.size() == 5);
  CHECK(p.boundaries[0] == 0.0);
  CHECK(p.boundaries[1] == doctest::Approx(0.25));
  CHECK(p.boundaries[3] == doctest::Approx(0.75));
  CHECK(p.boundaries[4] == 1.0);
  auto one = partition(1, 3.0);
  CHECK(one.lower(0) == 0.0);
  CHECK(one.upper(0) == 3.0);
  auto two = partition(2, 10.0);
  CHECK(two.boundaries == std::vector<double>{0.0, 5.0, 10.0});
  CHECK_THROWS_AS(partition(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(partition(2, 0.0), std::invalid_argument);
}

TEST_CASE("sample_tau stays in its interval and is uniform") {
  auto p = partition(4, 1.0);
  Rng rng(3);
  for (int k = 0; k < 10000; ++k) {
    const double t = sample_tau(p, 2, rng);
    CHECK((t >= 0.5 && t <= 0.75));
  }
  double sum = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) sum += sample_tau(p, 1, rng);
  CHECK(sum / n == doctest::Approx(0.375).epsilon(0.01));
  for (int k = 0; k < 10000; ++k) {
    const double t = sample_tau(p, 0, rng);
    CHECK(t > 0.0);
    CHECK(t <= 0.25);
  }
  for (int k = 0; k < 1000; ++k) CHECK(sample_tau(p, 3, rng) >= 0.75);
}

TEST_CASE("Euler and Heun empirical orders against the Gaussian ODE map") {
  const double euler = fitted_order(Solver::euler);
  const double heun = fitted_order(Solver::heun);
  MESSAGE("euler order " << euler << ", heun order " << heun);
  CHECK(std::abs(euler - 1.0) <= 0.15);
  CHECK(std::abs(heun - 2.0) <= 0.3);
}

TEST_CASE("final step to zero returns the denoiser output") {
  NoiseSchedule sch(10.0);
  const auto g = presets::ring8();
  auto x = ad::Tensor::matrix(1, 2, {0.3, -0.4});
  for (Solver s : {Solver::euler, Solver::heun}) {
    auto out = solver_step(s, x, 2.5, 0.0, sch, as_denoiser(g));
    const Eigen::VectorXd d = g.denoise(Eigen::VectorXd(Eigen::Vector2d(0.3, -0.4)), 2.5);
    CHECK(out.next.data()[0] == doctest::Approx(d[0]));
    CHECK(out.next.data()[1] == doctest::Approx(d[1]));
  }
  CHECK_THROWS_AS(euler_step(x, 1.0, 2.0, sch, as_denoiser(g)), std::invalid_argument);
}

TEST_CASE("trajectory record layout and gradient flag") {
  NoiseSchedule sch(10.0);
  const auto g = presets::ring8();
  auto p = partition(4, 10.0);
  auto rec = sample_trajectory(as_denoiser(g), p, sch, 16, 2, 7);
  CHECK(rec.points.size() == 4);
  CHECK(rec.times == std::vector<double>{7.5, 5.0, 2.5, 0.0});
  CHECK(rec.point_at(4).data()[0] == rec.start.data()[0]);
  CHECK(rec.point_at(0).data()[0] == rec.points.back().data()[0]);
  // x_0 is the clean output of the last step.
  CHECK(rec.point_at(0).data()[1] == rec.clean_at(0).data()[1]);
  CHECK(rec.input_of(1).data()[0] == rec.point_at(2).data()[0]);
  for (bool b : rec.carries_grad) CHECK_FALSE(b);

  auto rec2 = sample_trajectory(as_denoiser(g), p, sch, 16, 2, 7, std::size_t{2});
  CHECK(rec2.carries_grad == std::vector<bool>{false, true, false, false});
  CHECK(rec2.point_at(1).data()[0] == doctest::Approx(rec.point_at(1).data()[0]));
  CHECK_THROWS_AS(sample_trajectory(as_denoiser(g), p, sch, 16, 2, 7, std::size_t{4}),
                  std::out_of_range);
  CHECK_THROWS_AS(sample_trajectory(as_denoiser(g), partition(4, 1.0), sch, 16, 2, 7),
                  std::invalid_argument);
}

TEST_CASE("solver names") {
  CHECK(solver_from_string("heun") == Solver::heun);
  CHECK(solver_from_string("ddim") == Solver::euler);
  CHECK_THROWS_AS(solver_from_string("rk4"), std::invalid_argument);
}

}  // TEST_SUITE
