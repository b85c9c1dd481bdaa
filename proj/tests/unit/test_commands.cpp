#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "tdm/commands.hpp"
#include "tdm/runlog.hpp"

using namespace tdm;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "seed": 5,
  "network": {"hidden": [16, 16], "time_features": 4, "k_features": 4},
  "teacher": {"iterations": 150, "batch": 64, "log_every": 10},
  "distill": {"iterations": 12, "batch": 32, "steps": [2]},
  "eval": {"every": 6, "n_samples": 1000, "projections": 16, "log_every": 3}
})";

struct Workspace {
  fs::path root;
  fs::path config;

  explicit Workspace(const std::string& name)
      : root(fs::temp_directory_path() / ("tdm_cmd_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
    config = root / "tiny.json";
    std::ofstream(config) << kTinyConfig;
  }
  ~Workspace() { fs::remove_all(root); }

  CommandOptions opts(const std::string& out) const {
    CommandOptions o;
    o.config = config;
    o.out = root / out;
    return o;
  }
};

std::string contents_without_clock(const fs::path& manifest) {
  auto j = nlohmann::json::parse(read_file(manifest));
  j.erase("wall_clock_seconds");
  j.erase("seconds_per_iteration");
  return j.dump();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TDM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("teach, distill, eval and plot produce deterministic run directories") {
  Workspace ws("pipeline");
  std::ostringstream out;
  REQUIRE(cmd_teach(ws.opts("teach_a"), out) == 0);
  REQUIRE(cmd_teach(ws.opts("teach_b"), out) == 0);
  for (const char* f : {"teacher.ckpt", "log.csv", "trajectory.csv", "report.json", "config.json"}) {
    CHECK(read_file(ws.root / "teach_a" / f) == read_file(ws.root / "teach_b" / f));
  }
  CHECK(contents_without_clock(ws.root / "teach_a/manifest.json") ==
        contents_without_clock(ws.root / "teach_b/manifest.json"));
  // Reusing a finished run directory is refused.
  CHECK_THROWS_AS(cmd_teach(ws.opts("teach_a"), out), std::runtime_error);

  CommandOptions d = ws.opts("distill");
  d.teacher = ws.root / "teach_a/teacher.ckpt";
  REQUIRE(cmd_distill(d, out) == 0);
  const CsvTable log = read_csv_log(ws.root / "distill/log.csv");
  CHECK(log.rows.size() == 4);
  const CsvTable metrics = read_csv_log(ws.root / "distill/metrics.csv");
  CHECK(metrics.rows.size() == 2);
  const auto manifest = nlohmann::json::parse(read_file(ws.root / "distill/manifest.json"));
  CHECK(manifest["status"] == "complete");
  CHECK(manifest["mode"] == "tdm-huber");

  CommandOptions e = ws.opts("eval");
  e.student = ws.root / "distill/student.ckpt";
  e.steps = 4;
  std::ostringstream eval_out;
  REQUIRE(cmd_eval(e, eval_out) == 0);
  CHECK(eval_out.str().find("off-train-steps") != std::string::npos);
  const auto rep = nlohmann::json::parse(read_file(ws.root / "eval/report.json"));
  CHECK(rep["labels"]["flags"] == "off-train-steps");

  CommandOptions p;
  p.run = ws.root / "distill/";
  REQUIRE(cmd_plot(p, out) == 0);
  const fs::path plots = ws.root / "distill-plots";
  for (const char* f : {"loss.svg", "sliced_w2.svg", "grid_kl.svg", "boundary_0.svg", "boundary_2.svg"}) {
    CHECK(fs::exists(plots / f));
  }
  p.out = ws.root / "plots2";
  REQUIRE(cmd_plot(p, out) == 0);
  CHECK(read_file(plots / "loss.svg") == read_file(ws.root / "plots2/loss.svg"));
}

TEST_CASE("plot leaves nothing behind when the log is empty") {
  Workspace ws("emptyplot");
  const fs::path run = ws.root / "run";
  fs::create_directories(run);
  std::ofstream(run / "config.json") << kTinyConfig;
  { CsvLog log(run / "log.csv", {"iteration", "loss"}); }
  std::ofstream(run / "trajectory.csv") << "# tdm-samples v1\n";
  CommandOptions p;
  p.run = run;
  std::ostringstream out;
  CHECK_THROWS_AS(cmd_plot(p, out), std::runtime_error);
  CHECK_FALSE(fs::exists(ws.root / "run-plots"));
}

TEST_CASE("out root comes from the environment") {
  Workspace ws("envroot");
  CommandOptions o;
  o.config = ws.config;
  const RunConfig c = resolve_config(o);
  setenv(kOutRootEnv, ws.root.c_str(), 1);
  const fs::path dir = resolve_run_dir(o, c, "teach-ring8");
  unsetenv(kOutRootEnv);
  CHECK(dir.parent_path() == ws.root);
  CHECK(dir.filename().string() == "teach-ring8-" + config_digest(c).substr(0, 8) + "-s5");
  o.seed = 6;
  CHECK(resolve_config(o).seed == 6);
  o.n_samples = 10;
  CHECK_THROWS_AS(resolve_config(o), std::invalid_argument);
}

TEST_CASE("command line errors") {
  Workspace ws("cli");
  const fs::path log = ws.root / "cli.log";
  CHECK(run_cli("distill --config " + ws.config.string() + " --teacher " +
                    (ws.root / "nope.ckpt").string() + " --out " + (ws.root / "d").string(),
                log) == 1);
  CHECK(read_file(log).find("missing teacher") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.root / "d"));

  std::ofstream(ws.root / "bad.json") << R"({"dataset": "rings"})";
  CHECK(run_cli("teach --config " + (ws.root / "bad.json").string(), log) == 1);
  CHECK(read_file(log).find("ring8") != std::string::npos);

  CHECK(run_cli("ablate --suite nonsense --out " + (ws.root / "a").string(), log) == 1);
  CHECK(read_file(log).find("importance") != std::string::npos);

  CHECK(run_cli("frobnicate", log) != 0);
}

}  // TEST_SUITE
