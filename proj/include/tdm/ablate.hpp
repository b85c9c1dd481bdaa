#pragma once

// Matched-variant comparisons. Every variant of a suite runs under the same
// seed list and the same iteration budget; results are compared seed by seed.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tdm/config.hpp"
#include "tdm/metrics.hpp"

namespace tdm {

std::vector<std::string> ablation_suites();
/// Throws std::invalid_argument naming the available suites.
void check_suite(const std::string& suite);

struct VariantResult {
  std::string variant;
  std::uint64_t seed = 0;
  /// Keyed by sampling steps; for solver-cross the key is the test solver's
  /// report at the trained K and `test_solver` says which.
  std::map<int, MetricReport> reports;
  std::string test_solver;
  bool diverged = false;
};

struct OrderingCheck {
  std::string claim;
  std::vector<bool> per_seed;
  std::size_t required = 0;
  std::size_t holds() const;
  bool passed() const { return holds() >= required; }
};

struct AblationReport {
  std::string suite;
  std::vector<std::uint64_t> seeds;
  std::size_t iterations = 0;
  std::vector<VariantResult> rows;
  std::vector<OrderingCheck> checks;
  /// Scalar outcomes for suites without per-seed runs (shared-fake).
  std::vector<std::pair<std::string, double>> scalars;

  bool passed() const;
  std::string table() const;
  std::string to_csv() const;
  std::string to_json() const;
};

/// At least 4 of 5, generalised as ceil(0.8 n).
std::size_t required_majority(std::size_t n_seeds);

/// Runs suites against one teacher. Identical variant configurations are
/// trained once and shared between suites.
class AblationRunner {
 public:
  AblationRunner(DenoiserNet teacher, std::ostream* progress);

  AblationReport run(const std::string& suite, const RunConfig& base,
                     const std::vector<std::uint64_t>& seeds);

  /// Trains (or reuses) the variant and evaluates it at each of `eval_steps`
  /// with `test_solver`.
  VariantResult variant(const std::string& name, const RunConfig& config,
                        const std::vector<int>& eval_steps, Solver test_solver);

 private:
  struct Trained {
    DenoiserNet student;
    std::vector<int> trained_steps;
    bool diverged = false;
  };
  const Trained& train(const RunConfig& config);

  DenoiserNet teacher_;
  std::ostream* progress_;
  std::map<std::string, Trained> trained_;
  std::map<std::string, MetricReport> evaluated_;
};

}  // namespace tdm
