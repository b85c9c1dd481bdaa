#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tdm/denoiser.hpp"
#include "tdm/grid.hpp"
#include "tdm/runlog.hpp"
#include "tdm/teacher.hpp"

using namespace tdm;
namespace fs = std::filesystem;

namespace {

NetConfig small_net() {
  NetConfig c;
  c.hidden = {16, 16};
  c.time_features = 4;
  c.k_features = 4;
  return c;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tdm_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("denoiser") {

TEST_CASE("zero noise is the identity and outputs are finite") {
  DenoiserNet net(small_net(), Role::teacher, false, 1);
  auto x = ad::Tensor::matrix(2, 2, {0.5, -1.0, 3.0, 2.0});
  auto y = net.forward(x, 0.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(y.data()[i] == x.data()[i]);
  auto z = net.forward(x, 5.0);
  for (double v : z.data()) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(net.forward(x, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(net.forward(ad::Tensor::matrix(1, 3, {1, 2, 3}), 1.0), ad::ShapeError);
}

TEST_CASE("same seed gives the same weights") {
  DenoiserNet a(small_net(), Role::teacher, false, 9), b(small_net(), Role::teacher, false, 9);
  DenoiserNet c(small_net(), Role::teacher, false, 10);
  auto x = ad::Tensor::matrix(1, 2, {0.2, 0.1});
  CHECK(a.forward(x, 1.0).data()[0] == b.forward(x, 1.0).data()[0]);
  CHECK(a.parameters()[0].data()[0] != c.parameters()[0].data()[0]);
}

TEST_CASE("clone with step conditioning computes the same function") {
  DenoiserNet teacher(small_net(), Role::teacher, false, 2);
  {
    // Give the output layer non-zero weights so the check is not vacuous.
    auto p = teacher.parameters();
    for (auto& t : p) {
      std::vector<double> v(t.data().begin(), t.data().end());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.01 * std::sin(static_cast<double>(i));
      t = ad::Tensor::from(t.shape(), v, true);
    }
    teacher.set_parameters(p);
  }
  DenoiserNet student = teacher.clone_as(Role::student, true);
  CHECK(student.k_conditioning());
  CHECK(student.role() == Role::student);
  auto x = ad::Tensor::matrix(2, 2, {0.5, -1.0, 3.0, 2.0});
  auto a = teacher.forward(x, 2.0);
  for (int k : {1, 2, 4}) {
    auto b = student.forward(x, 2.0, k);
    for (std::size_t i = 0; i < 4; ++i) CHECK(b.data()[i] == doctest::Approx(a.data()[i]).epsilon(1e-14));
  }
  // Fresh leaves: gradients of the clone never alias the source.
  CHECK(student.parameters()[0].node() != teacher.parameters()[0].node());
}

TEST_CASE("parameter gradients match central differences") {
  DenoiserNet net(small_net(), Role::teacher, false, 3);
  {
    auto p = net.parameters();
    for (auto& t : p) {
      std::vector<double> v(t.data().begin(), t.data().end());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.05 * std::cos(1.0 + static_cast<double>(i));
      t = ad::Tensor::from(t.shape(), v, true);
    }
    net.set_parameters(p);
  }
  auto x = ad::Tensor::matrix(3, 2, {0.5, -1.0, 3.0, 2.0, -0.2, 0.7});
  std::vector<double> sigma{0.3, 1.0, 4.0};
  auto loss_of = [&](const DenoiserNet& n) { return ad::sum(ad::square(n.forward(x, sigma))); };
  ad::Tape tape;
  auto g = tape.backward(loss_of(net));
  const double h = 1e-6;
  for (std::size_t k : {std::size_t{0}, net.parameters().size() - 2, net.parameters().size() - 1}) {
    for (std::size_t i = 0; i < std::min<std::size_t>(net.parameters()[k].numel(), 6); ++i) {
      auto shifted = [&](double delta) {
        DenoiserNet m = net;
        auto p = m.parameters();
        std::vector<double> v(p[k].data().begin(), p[k].data().end());
        v[i] += delta;
        p[k] = ad::Tensor::from(p[k].shape(), v, true);
        m.set_parameters(p);
        ad::NoGradGuard guard;
        return loss_of(m).item();
      };
      const double fd = (shifted(h) - shifted(-h)) / (2 * h);
      CHECK(g.of(net.parameters()[k]).data()[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = scratch("ckpt");
  fs::create_directories(dir);
  DenoiserNet net(small_net(), Role::student, true, 4);
  NoiseSchedule sch(7.0);
  save_checkpoint(net, sch, dir / "a.ckpt", {1, 2, 4});
  Checkpoint ck = load_checkpoint(dir / "a.ckpt");
  CHECK(ck.net.config() == net.config());
  CHECK(ck.net.role() == Role::student);
  CHECK(ck.net.k_conditioning());
  CHECK(ck.schedule.terminal_time() == 7.0);
  CHECK(ck.trained_steps == std::vector<int>{1, 2, 4});
  for (std::size_t k = 0; k < net.parameters().size(); ++k) {
    auto a = net.parameters()[k].data(), b = ck.net.parameters()[k].data();
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
  save_checkpoint(ck.net, ck.schedule, dir / "b.ckpt", ck.trained_steps);
  CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));

  std::string bytes = read_file(dir / "a.ckpt");
  std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), std::runtime_error);
  std::ofstream(dir / "magic.ckpt", std::ios::binary) << "NOTNET\n";
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.ckpt"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("denoising loss of the identity map") {
  DenoiserNet net(small_net(), Role::teacher, false, 5);
  auto x = ad::Tensor::matrix(2, 2, {1.0, 2.0, 3.0, 4.0});
  auto eps = ad::Tensor::matrix(2, 2, {0.5, -0.5, 1.0, 0.0});
  // At sigma = 0 the network is the identity, so the loss is exactly 0.
  std::vector<double> zero{0.0, 0.0};
  CHECK(denoising_loss(net, x, zero, eps).item() == 0.0);
}

TEST_CASE("single-Gaussian teacher reaches score error below 1%") {
  const auto g = presets::single_gauss();
  NoiseSchedule sch(10.0);
  NetConfig cfg = small_net();
  cfg.hidden = {32, 32};
  DenoiserNet net(cfg, Role::teacher, false, 0);
  TeacherTrainConfig tc;
  tc.iterations = 1500;
  tc.batch = 128;
  tc.log_every = 0;
  train_teacher(gmm_sampler(g), net, sch, tc);
  const GridSpec grid = GridSpec::around(g);
  for (double t : {1.0, 5.0, 9.0}) {
    const double err = grid_score_error(net, g, sch, t, grid);
    MESSAGE("t = " << t << " score error " << err);
    CHECK(err < 0.01);
  }
}

}  // TEST_SUITE
