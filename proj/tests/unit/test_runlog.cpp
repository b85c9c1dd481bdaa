#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tdm/runlog.hpp"
#include "tdm/svg.hpp"

using namespace tdm;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tdm_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("runlog") {

TEST_CASE("run directories are never reused") {
  const fs::path dir = fresh("rundir");
  create_run_dir(dir);
  create_run_dir(dir);  // empty is fine
  write_file_atomic(dir / "a.txt", "hello");
  CHECK(read_file(dir / "a.txt") == "hello");
  CHECK_THROWS_AS(create_run_dir(dir), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("csv log round trip") {
  const fs::path dir = fresh("csv");
  fs::create_directories(dir);
  {
    CsvLog log(dir / "log.csv", {"iteration", "loss", "note"});
    log.append(0, std::vector<std::string>{"0.5", "start"});
    log.append(10, std::vector<std::string>{"0.25", "x"});
    CHECK_THROWS_AS(log.append(5, std::vector<std::string>{"1", "y"}), std::invalid_argument);
    CHECK_THROWS_AS(log.append(11, std::vector<std::string>{"1"}), std::invalid_argument);
    CHECK(log.rows() == 2);
  }
  const std::string text = read_file(dir / "log.csv");
  CHECK(text.rfind("# tdm-log v1\niteration,loss,note\n", 0) == 0);
  const CsvTable t = read_csv_log(dir / "log.csv");
  CHECK(t.columns == std::vector<std::string>{"iteration", "loss", "note"});
  CHECK(t.rows.size() == 2);
  CHECK(t.numbers("loss") == std::vector<double>{0.5, 0.25});
  CHECK(t.numbers("iteration") == std::vector<double>{0, 10});
  CHECK_THROWS_AS(t.column("missing"), std::out_of_range);
  CHECK_THROWS_AS(CsvLog(dir / "bad.csv", {"step", "loss"}), std::invalid_argument);

  std::ofstream(dir / "old.csv") << "# tdm-log v0\niteration\n";
  CHECK_THROWS_AS(read_csv_log(dir / "old.csv"), std::runtime_error);
  CHECK_THROWS_AS(read_csv_log(dir / "none.csv"), std::runtime_error);
  std::ofstream(dir / "ragged.csv") << "# tdm-log v1\niteration,loss\n0,1\n1\n";
  CHECK_THROWS_AS(read_csv_log(dir / "ragged.csv"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("number formatting is stable") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1e-12) == "1e-12");
  CHECK(format_number(123456789.0) == "123456789");
}

TEST_CASE("svg output is deterministic") {
  svg::Series s{"loss", {0, 1, 2, 3}, {1.0, 0.5, 0.25, 0.125}};
  const std::string a = svg::line_chart("loss", "iteration", "value", {s}, true);
  const std::string b = svg::line_chart("loss", "iteration", "value", {s}, true);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);

  Samples pts(3, 2);
  pts << 0.0, 0.0, 1.0, -1.0, 0.5, 0.25;
  svg::Bounds box{-2, 2, -2, 2};
  const std::string c = svg::scatter_chart("t = 0", {{"student", pts}}, box);
  CHECK(c == svg::scatter_chart("t = 0", {{"student", pts}}, box));
  CHECK(c.find("student") != std::string::npos);

  svg::Series bad{"x", {0, 1}, {1}};
  CHECK_THROWS_AS(svg::line_chart("t", "x", "y", {bad}), std::invalid_argument);
  CHECK_THROWS_AS(svg::scatter_chart("t", {}, svg::Bounds{0, 0, 0, 1}), std::invalid_argument);
}

}  // TEST_SUITE
