#pragma once

// The user-facing subcommands. Each returns a process exit code and writes a
// self-contained run directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tdm/config.hpp"
#include "tdm/metrics.hpp"

namespace tdm {

/// Environment variable that replaces the config's output_root.
inline constexpr const char* kOutRootEnv = "TDM_OUT_ROOT";

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> mode;
  std::optional<int> steps;
  std::optional<std::string> solver;
  std::optional<std::filesystem::path> teacher;
  std::optional<std::filesystem::path> student;
  std::optional<std::filesystem::path> run;
  std::optional<std::string> suite;
  std::optional<std::size_t> n_samples;
  std::optional<std::size_t> iterations;
  std::optional<int> seeds;
};

/// Config file (or defaults) with the command-line overrides applied.
RunConfig resolve_config(const CommandOptions& opts);

/// --out if given, else <root>/<name>-<digest prefix>-s<seed> with root taken
/// from TDM_OUT_ROOT or the config.
std::filesystem::path resolve_run_dir(const CommandOptions& opts, const RunConfig& config,
                                      const std::string& name);

struct DistillOutcome {
  DenoiserNet student;
  DenoiserNet fake;
  std::vector<int> trained_steps;
  std::size_t iterations = 0;
  std::size_t skipped = 0;
  double seconds_per_iteration = 0.0;
  bool diverged = false;
};

/// Runs the configured distill mode. When `run_dir` is given the per-iteration
/// log, periodic metric rows and the final checkpoints are written there.
DistillOutcome run_distillation(const RunConfig& config, const DenoiserNet& teacher,
                                const std::filesystem::path* run_dir, std::ostream* progress);

/// Student evaluation at `steps` with the full metric set. `trained_steps`
/// (empty for teachers) drives the off-train-steps flag.
MetricReport evaluate_student(const DenoiserNet& student, const std::vector<int>& trained_steps,
                              const RunConfig& config, int steps, Solver solver,
                              std::size_t n_samples, std::uint64_t seed,
                              const DenoiserNet* teacher);

int cmd_teach(const CommandOptions& opts, std::ostream& out);
int cmd_distill(const CommandOptions& opts, std::ostream& out);
int cmd_eval(const CommandOptions& opts, std::ostream& out);
int cmd_plot(const CommandOptions& opts, std::ostream& out);
int cmd_ablate(const CommandOptions& opts, std::ostream& out);

}  // namespace tdm
