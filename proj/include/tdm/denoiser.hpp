#pragma once

// Conditioned MLP denoiser used for the teacher, the student and the fake
// score.
//
// The raw network F sees concat(c_in * x, time features, step-count features)
// and the denoiser output is c_skip * x + c_out * F with the usual
// sigma_data preconditioning, so D(x, sigma) -> x as sigma -> 0.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tdm/autodiff.hpp"
#include "tdm/schedule.hpp"

namespace tdm {

enum class Role { teacher, student, fake };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

struct NetConfig {
  std::size_t data_dim = 2;
  std::vector<std::size_t> hidden{128, 128, 128, 128};
  std::size_t time_features = 8;
  std::size_t k_features = 8;
  double sigma_data = 1.0;

  bool operator==(const NetConfig&) const = default;
};

/// sin/cos features of log(sigma); deterministic in sigma.
std::vector<double> time_embedding(double sigma, std::size_t features);
/// sin/cos features of log(K).
std::vector<double> steps_embedding(int steps, std::size_t features);

class DenoiserNet {
 public:
  DenoiserNet() = default;
  DenoiserNet(NetConfig config, Role role, bool k_conditioning, std::uint64_t seed);

  /// x: [n, d]; sigma: one noise level per row. `steps` is ignored unless
  /// K-conditioning is enabled.
  ad::Tensor forward(const ad::Tensor& x, std::span<const double> sigma, int steps = 0) const;
  ad::Tensor forward(const ad::Tensor& x, double sigma, int steps = 0) const;

  const NetConfig& config() const { return config_; }
  Role role() const { return role_; }
  bool k_conditioning() const { return k_conditioning_; }
  std::size_t input_width() const;
  std::size_t parameter_count() const;

  std::vector<ad::Tensor>& parameters() { return params_; }
  const std::vector<ad::Tensor>& parameters() const { return params_; }
  void set_parameters(std::vector<ad::Tensor> params);

  /// Copy of the weights under a new role. Step-count input weights are
  /// zeroed whenever K-conditioning is switched on, so the copy computes the
  /// same function as the source at initialization.
  DenoiserNet clone_as(Role role, bool k_conditioning) const;

 private:
  NetConfig config_;
  Role role_ = Role::teacher;
  bool k_conditioning_ = false;
  std::vector<ad::Tensor> params_;  // W0, b0, W1, b1, ..., W_out, b_out
};

/// Plain-text header followed by little-endian float64 parameters.
inline constexpr int kCheckpointVersion = 1;

/// `trained_steps` records the step counts a student was distilled for.
void save_checkpoint(const DenoiserNet& net, const NoiseSchedule& schedule,
                     const std::filesystem::path& path, const std::vector<int>& trained_steps = {});

struct Checkpoint {
  DenoiserNet net;
  NoiseSchedule schedule;
  std::vector<int> trained_steps;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tdm
