#include <cmath>
#include <numbers>

#include "doctest.h"
#include "json.hpp"
#include "tdm/metrics.hpp"
#include "tdm/partition.hpp"
#include "tdm/teacher.hpp"

using namespace tdm;

TEST_SUITE("metrics") {

TEST_CASE("1-D W2 on small empirical measures") {
  CHECK(wasserstein_1d({0.0, 1.0}, {1.0, 2.0}) == doctest::Approx(1.0));
  CHECK(wasserstein_1d({3.0, 0.0}, {0.0, 3.0}) == doctest::Approx(0.0));
  // Unequal sizes: half the mass moves by 2.
  CHECK(wasserstein_1d({0.0}, {0.0, 2.0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("1-D W2 of shifted unit Gaussians is the shift") {
  Rng rng(1);
  std::normal_distribution<double> z;
  std::vector<double> a(20000), b(20000);
  for (double& v : a) v = z(rng);
  for (double& v : b) v = 3.0 + z(rng);
  CHECK(wasserstein_1d(a, b) == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("sliced W2") {
  Rng rng(2);
  const Samples a = standard_normal(4000, 2, rng);
  CHECK(sliced_wasserstein(a, a, 64, rng) == doctest::Approx(0.0).scale(1.0));
  // A rigid shift by v projects to |v . theta|; its mean over the circle is 2|v|/pi.
  const Eigen::RowVector2d v(1.5, -2.0);
  const Samples b = a.rowwise() + v;
  const double sw = sliced_wasserstein(a, b, 4096, rng);
  CHECK(sw == doctest::Approx(v.norm() * 2 / std::numbers::pi).epsilon(0.03));
  CHECK_THROWS_AS(sliced_wasserstein(a.topRows(50), a, 16, rng), std::invalid_argument);
}

TEST_CASE("grid KL calibration and monotonicity") {
  const auto g = presets::ring8();
  NoiseSchedule sch(10.0);
  const GridSpec grid = GridSpec::around(g);
  Rng rng(3);
  const std::size_t n = 10000;
  const double floor = grid_kl_floor(g, 0.0, sch, grid, n, rng);
  const Samples exact = g.sample(n, rng);
  const double kl_exact = grid_kl_vs_analytic(exact, g, 0.0, sch, grid).kl;
  CHECK(kl_exact == doctest::Approx(floor).epsilon(0.02));
  double prev = -1.0;
  const double s = g.component_std(0);
  for (double shift : {0.0, 1.0, 2.0, 3.0}) {
    const Samples moved = exact.rowwise() + Eigen::RowVector2d(shift * s, 0.0);
    const GridKL kl = grid_kl_vs_analytic(moved, g, 0.0, sch, grid);
    CHECK(kl.kl >= 0.0);
    CHECK(kl.kl > prev);
    if (shift == 2.0) CHECK(kl.kl > floor + 1.0);
    prev = kl.kl;
  }
  const Samples far = exact.array() + 100.0;
  const GridKL out = grid_kl_vs_analytic(far, g, 0.0, sch, grid);
  CHECK(out.out_of_bounds == 1.0);
  CHECK(out.kl >= 0.0);
}

TEST_CASE("grid cell indexing agrees with cell centers") {
  GridSpec grid;
  grid.lower = {-1.0, 0.0};
  grid.upper = {1.0, 4.0};
  grid.resolution = 16;
  const Samples c = grid.centers();
  for (Eigen::Index r = 0; r < c.rows(); ++r) CHECK(grid.cell_of(c.row(r).data()) == r);
  const double outside[2] = {1.0, 2.0};
  CHECK(grid.cell_of(outside) == -1);
  grid.resolution = 8;
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
}

TEST_CASE("mode coverage") {
  const auto g = presets::ring8();
  Rng rng(4);
  CHECK(mode_coverage(g.sample(5000, rng), g).covered == 8);
  std::vector<GaussianComponent> half(g.components().begin(), g.components().begin() + 4);
  for (auto& c : half) c.weight = 0.25;
  const auto cov = mode_coverage(GaussianMixture(half).sample(5000, rng), g);
  CHECK(cov.covered == 4);
  Samples centre = Samples::Zero(100, 2);
  CHECK(mode_coverage(centre, g).unassigned == 100);
}

TEST_CASE("trajectory marginals of the exact sampler") {
  const auto g = presets::ring8();
  NoiseSchedule sch(10.0);
  const auto part = partition(4, 10.0);
  auto rec = sample_trajectory(as_denoiser(g), part, sch, 2000, 2, 5, std::nullopt, Solver::heun);
  Rng rng(6);
  const auto dist = trajectory_marginal_distance(rec, g, part, sch, 64, rng);
  const auto floors = trajectory_marginal_floors(g, part, sch, 2000, 64, rng);
  REQUIRE(dist.size() == 5);
  REQUIRE(floors.size() == 5);
  // The starting noise is an exact draw of p_T.
  CHECK(dist[4] < 3 * floors[4]);
  CHECK_THROWS_AS(trajectory_marginal_distance(rec, g, partition(2, 10.0), sch, 64, rng),
                  std::invalid_argument);
  auto small = sample_trajectory(as_denoiser(g), part, sch, 500, 2, 5);
  CHECK_THROWS_AS(trajectory_marginal_distance(small, g, part, sch, 64, rng), std::invalid_argument);
}

TEST_CASE("metric report serialization") {
  MetricReport r;
  r.seed = 3;
  r.n_samples = 100;
  r.config_digest = "abc";
  r.label("flags", "none");
  r.set("sliced_w2", 0.25);
  r.set("grid_kl", 1.5);
  r.set("sliced_w2", 0.5);
  CHECK(r.get("sliced_w2") == 0.5);
  CHECK(r.metrics().size() == 2);
  CHECK_THROWS_AS(r.set("bad", std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(r.get("missing"), std::out_of_range);
  CHECK(r.csv_header() == "seed,n_samples,config_digest,flags,sliced_w2,grid_kl");
  CHECK(r.csv_row() == "3,100,abc,none,0.5,1.5");
  auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["metrics"]["grid_kl"] == 1.5);
  CHECK(j["labels"]["flags"] == "none");
}

TEST_CASE("evaluate_sampler on the analytic denoiser") {
  const auto g = presets::ring8();
  NoiseSchedule sch(10.0);
  EvalRequest req;
  req.steps = 2;
  req.n_samples = 2000;
  req.projections = 32;
  req.seed = 9;
  const MetricReport a = evaluate_sampler(as_denoiser(g), g, sch, req);
  for (const char* k : {"sliced_w2", "sliced_w2_floor", "grid_kl", "grid_kl_floor", "out_of_bounds",
                        "modes_covered", "modes_total", "traj_sw_0", "traj_floor_2"}) {
    CHECK(a.has(k));
  }
  CHECK_FALSE(a.has("teacher_sliced_w2"));
  const MetricReport b = evaluate_sampler(as_denoiser(g), g, sch, req);
  CHECK(a.csv_row() == b.csv_row());
}

}  // TEST_SUITE
