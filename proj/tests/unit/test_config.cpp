#include <string>

#include "doctest.h"
#include "tdm/config.hpp"

using namespace tdm;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "run.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty document gives the defaults") {
  const RunConfig c = parse_config("{}");
  CHECK(config_digest(c) == config_digest(RunConfig{}));
  CHECK(c.dataset == "ring8");
  CHECK(c.teacher.iterations == 20000);
  CHECK(c.distill.iterations == 5000);
  CHECK(c.distill.batch == 256);
  CHECK(c.distill.lr_generator == 1e-4);
  CHECK(c.distill.lr_fake == 1e-3);
  CHECK(c.distill.beta1 == 0.0);
  CHECK(c.distill.beta2 == 0.999);
  CHECK(c.distill.clip_norm == 1.0);
  CHECK(c.distill.fake_updates_per_iter == 1);
  CHECK(c.eval.n_samples == 10000);
  CHECK(c.hidden == std::vector<std::size_t>{128, 128, 128, 128});
}

TEST_CASE("canonical form round-trips") {
  RunConfig c;
  c.seed = 42;
  c.distill.mode = DistillMode::tdm_unify;
  c.distill.huber_c = 0.01;
  c.sigma_data = 0.7;
  const RunConfig back = parse_config(canonical_json(c));
  CHECK(canonical_json(back) == canonical_json(c));
  CHECK(config_digest(back) == config_digest(c));
  c.seed = 43;
  CHECK(config_digest(back) != config_digest(c));
}

TEST_CASE("digest ignores formatting and key order") {
  const RunConfig a = parse_config(R"({"seed": 3, "distill": {"iterations": 10, "batch": 32}})");
  const RunConfig b = parse_config("{\n  \"distill\": {\"batch\": 32,\n \"iterations\": 10},\n \"seed\": 3\n}");
  CHECK(config_digest(a) == config_digest(b));
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("diagnostics name the line or the field") {
  const std::string syntax = error_of("{\n  \"seed\": 1,\n  \"dataset\": ring8\n}");
  CHECK(contains(syntax, "run.json:3:"));
  CHECK(contains(error_of(R"({"distill": {"lr_gen": 1}})"), "distill.lr_gen"));
  CHECK(contains(error_of(R"({"distill": {"batch": -1}})"), "distill.batch"));
  CHECK(contains(error_of(R"({"teacher": {"lr": "fast"}})"), "teacher.lr"));
  CHECK(contains(error_of(R"({"dataset": "rings"})"), "ring8"));
  CHECK(contains(error_of(R"({"distill": {"mode": "dmd"}})"), "tdm-huber"));
  CHECK(contains(error_of(R"({"eval": {"n_samples": 10}})"), "eval.n_samples"));
  CHECK(contains(error_of(R"({"network": {"hidden": [64, 0]}})"), "network.hidden[1]"));
  CHECK(contains(error_of(R"({"schedule": {"family": "cosine"}})"), "schedule.family"));
  CHECK(contains(error_of("[1, 2]"), "expected an object"));
}

TEST_CASE("modes map onto engine settings") {
  RunConfig c;
  c.distill.mode = DistillMode::tdm_unify;
  CHECK(c.distill_config().steps_list == std::vector<int>{1, 2, 4});
  CHECK(c.distill_config().unified());
  c.distill.mode = DistillMode::clean_matching;
  CHECK(c.distill_config().target == MatchTarget::clean);
  CHECK(c.distill_config().steps_list == std::vector<int>{4});
  c.distill.mode = DistillMode::tdm_l2;
  c.distill.objective = GeneratorObjective::huber;
  CHECK(c.distill_config().objective == GeneratorObjective::l2);
  c.seed = 17;
  CHECK(c.distill_config().seed == 17);
  for (const auto& name : distill_mode_names()) CHECK(to_string(distill_mode_from_string(name)) == name);
}

TEST_CASE("sigma_data auto resolves from the dataset") {
  RunConfig c;
  const auto g = c.mixture();
  CHECK(c.net_config().sigma_data == doctest::Approx(std::sqrt(g.covariance().trace() / 2)));
  c = parse_config(R"({"network": {"sigma_data": 0.5}})");
  CHECK(c.net_config().sigma_data == 0.5);
  c = parse_config(R"({"network": {"sigma_data": "auto"}})");
  CHECK_FALSE(c.sigma_data.has_value());
}

}  // TEST_SUITE
