#pragma once

// Run configuration: one JSON document per run, validated field by field.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdm/denoiser.hpp"
#include "tdm/distill.hpp"
#include "tdm/gmm.hpp"
#include "tdm/teacher.hpp"

namespace tdm {

/// Parse or validation failure; the message starts with "<source>:<line>:<col>"
/// for syntax errors and with the dotted field path otherwise.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DistillMode { tdm_l2, tdm_huber, tdm_unify, clean_matching, instance_traj };

std::string to_string(DistillMode mode);
DistillMode distill_mode_from_string(const std::string& name);
std::vector<std::string> distill_mode_names();

struct TeacherSection {
  std::size_t iterations = 20000;
  std::size_t batch = 256;
  double lr = 2e-3;
  double lr_final = 1e-5;
  double beta1 = 0.9;
  double clip_norm = 1.0;
  LossWeighting weighting = LossWeighting::uniform;
  std::size_t log_every = 100;
};

struct DistillSection {
  DistillMode mode = DistillMode::tdm_huber;
  std::size_t iterations = 5000;
  std::size_t batch = 256;
  std::vector<int> steps{4};
  std::vector<int> unify_steps{1, 2, 4};
  Solver solver = Solver::euler;
  /// Used by tdm-unify and clean-matching; the tdm-l2 and tdm-huber modes fix it.
  GeneratorObjective objective = GeneratorObjective::huber;
  LambdaRule lambda_rule = LambdaRule::sigma2;
  std::optional<double> huber_c;
  LossWeighting omega_rule = LossWeighting::uniform;
  bool importance_weights = true;
  double importance_clip = 10.0;
  int fake_updates_per_iter = 1;
  double lr_generator = 1e-4;
  double lr_fake = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double clip_norm = 1.0;
  double weight_decay = 0.0;
  int instance_teacher_steps = 4;
  std::size_t instance_pool_size = 8192;
};

struct EvalSection {
  std::size_t every = 1000;
  std::size_t n_samples = 10000;
  int projections = 128;
  std::size_t log_every = 10;
};

struct RunConfig {
  std::string dataset = "ring8";
  std::uint64_t seed = 0;
  std::string output_root = "runs";
  double terminal_time = 10.0;
  std::string sigma_family = "linear";
  std::vector<std::size_t> hidden{128, 128, 128, 128};
  std::size_t time_features = 8;
  std::size_t k_features = 8;
  /// Empty means sqrt(trace(Cov) / d) of the dataset.
  std::optional<double> sigma_data;
  TeacherSection teacher;
  DistillSection distill;
  EvalSection eval;

  GaussianMixture mixture() const;
  NoiseSchedule schedule() const;
  NetConfig net_config() const;
  TeacherTrainConfig teacher_config() const;
  /// Engine settings for the configured distill mode.
  DistillConfig distill_config() const;
};

/// Throws ConfigError. `source` names the document in diagnostics.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration with sorted keys; the digest input.
std::string canonical_json(const RunConfig& config);
/// 16 hex digits of FNV-1a 64 over canonical_json.
std::string config_digest(const RunConfig& config);
std::string fnv1a_hex(const std::string& bytes);

}  // namespace tdm
