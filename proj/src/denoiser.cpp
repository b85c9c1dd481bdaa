#include "tdm/denoiser.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tdm {
namespace {

constexpr double kMinSigma = 1e-4;

void check_even(std::size_t features, const char* what) {
  if (features % 2 != 0) throw std::invalid_argument(std::string(what) + " must be even");
}

std::vector<double> sincos_features(double value, std::size_t features) {
  std::vector<double> out(features);
  for (std::size_t k = 0; k < features / 2; ++k) {
    const double f = std::ldexp(1.0, static_cast<int>(k));
    out[2 * k] = std::sin(f * value);
    out[2 * k + 1] = std::cos(f * value);
  }
  return out;
}

ad::Tensor row_constant(std::span<const double> per_row, std::size_t cols) {
  std::vector<double> data(per_row.size() * cols);
  for (std::size_t r = 0; r < per_row.size(); ++r) {
    std::fill_n(data.begin() + r * cols, cols, per_row[r]);
  }
  return ad::Tensor::matrix(per_row.size(), cols, std::move(data));
}

}  // namespace

std::string to_string(Role role) {
  switch (role) {
    case Role::teacher: return "teacher";
    case Role::student: return "student";
    case Role::fake: return "fake";
  }
  return "unknown";
}

Role role_from_string(const std::string& name) {
  if (name == "teacher") return Role::teacher;
  if (name == "student") return Role::student;
  if (name == "fake") return Role::fake;
  throw std::invalid_argument("unknown network role '" + name + "'");
}

std::vector<double> time_embedding(double sigma, std::size_t features) {
  check_even(features, "time_features");
  return sincos_features(std::log(std::max(sigma, kMinSigma)) / 4.0, features);
}

std::vector<double> steps_embedding(int steps, std::size_t features) {
  check_even(features, "k_features");
  if (steps < 1) throw std::invalid_argument("step count must be >= 1");
  return sincos_features(std::log(static_cast<double>(steps)), features);
}

DenoiserNet::DenoiserNet(NetConfig config, Role role, bool k_conditioning, std::uint64_t seed)
    : config_(std::move(config)), role_(role), k_conditioning_(k_conditioning) {
  if (config_.data_dim == 0) throw std::invalid_argument("denoiser: data_dim must be > 0");
  if (config_.hidden.empty()) throw std::invalid_argument("denoiser: need at least one hidden layer");
  if (!(config_.sigma_data > 0.0)) throw std::invalid_argument("denoiser: sigma_data must be > 0");
  check_even(config_.time_features, "time_features");
  check_even(config_.k_features, "k_features");

  std::mt19937_64 rng(seed);
  std::size_t fan_in = input_width();
  const std::size_t k_begin = config_.data_dim + config_.time_features;
  for (std::size_t layer = 0; layer <= config_.hidden.size(); ++layer) {
    const bool last = layer == config_.hidden.size();
    const std::size_t fan_out = last ? config_.data_dim : config_.hidden[layer];
    // He-uniform weights, small uniform biases
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uni(-bound, bound);
    std::uniform_real_distribution<double> uni_b(-0.1, 0.1);
    std::vector<double> w(fan_in * fan_out, 0.0);
    std::vector<double> b(fan_out, 0.0);
    if (!last) {
      for (double& v : w) v = uni(rng);
      for (double& v : b) v = uni_b(rng);
      if (layer == 0) {
        // step-count inputs start disconnected
        for (std::size_t r = k_begin; r < k_begin + config_.k_features; ++r) {
          std::fill_n(w.begin() + r * fan_out, fan_out, 0.0);
        }
      }
    }
    params_.push_back(ad::Tensor::matrix(fan_in, fan_out, std::move(w), true));
    params_.push_back(ad::Tensor::from({fan_out}, std::move(b), true));
    fan_in = fan_out;
  }
}

std::size_t DenoiserNet::input_width() const {
  return config_.data_dim + config_.time_features + config_.k_features;
}

std::size_t DenoiserNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

void DenoiserNet::set_parameters(std::vector<ad::Tensor> params) {
  if (params.size() != params_.size()) {
    throw std::invalid_argument("denoiser: parameter count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape() != params_[k].shape()) {
      throw std::invalid_argument("denoiser: parameter shape mismatch");
    }
  }
  params_ = std::move(params);
}

ad::Tensor DenoiserNet::forward(const ad::Tensor& x, double sigma, int steps) const {
  std::vector<double> s(x.rows(), sigma);
  return forward(x, s, steps);
}

ad::Tensor DenoiserNet::forward(const ad::Tensor& x, std::span<const double> sigma,
                                int steps) const {
  const std::size_t d = config_.data_dim;
  if (x.dim() != 2 || x.shape()[1] != d) {
    throw ad::ShapeError("denoiser: input must be [n, " + std::to_string(d) + "]");
  }
  const std::size_t n = x.rows();
  if (sigma.size() != n) throw ad::ShapeError("denoiser: one sigma per row required");

  const double sd2 = config_.sigma_data * config_.sigma_data;
  std::vector<double> c_in(n), c_skip(n), c_out(n);
  const std::size_t tf = config_.time_features;
  const std::size_t kf = config_.k_features;
  std::vector<double> cond(n * (tf + kf), 0.0);
  std::vector<double> k_emb;
  if (k_conditioning_) k_emb = steps_embedding(steps, kf);
  for (std::size_t r = 0; r < n; ++r) {
    const double s = sigma[r];
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("denoiser: bad sigma");
    c_in[r] = 1.0 / std::sqrt(s * s + sd2);
    c_skip[r] = sd2 / (s * s + sd2);
    c_out[r] = s * config_.sigma_data / std::sqrt(s * s + sd2);
    const auto te = time_embedding(s, tf);
    std::copy(te.begin(), te.end(), cond.begin() + r * (tf + kf));
    if (k_conditioning_) std::copy(k_emb.begin(), k_emb.end(), cond.begin() + r * (tf + kf) + tf);
  }

  ad::Tensor h = ad::concat({ad::mul(x, row_constant(c_in, d)),
                             ad::Tensor::matrix(n, tf + kf, std::move(cond))});
  const std::size_t layers = config_.hidden.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = ad::silu(ad::add(ad::matmul(h, params_[2 * l]), params_[2 * l + 1]));
  }
  ad::Tensor raw = ad::add(ad::matmul(h, params_[2 * layers]), params_[2 * layers + 1]);
  return ad::add(ad::mul(x, row_constant(c_skip, d)), ad::mul(raw, row_constant(c_out, d)));
}

DenoiserNet DenoiserNet::clone_as(Role role, bool k_conditioning) const {
  DenoiserNet out = *this;
  out.role_ = role;
  // fresh leaves so gradients of the copy never alias the source
  for (auto& p : out.params_) p = p.with_requires_grad(true);
  if (k_conditioning && !k_conditioning_) {
    const ad::Tensor& w0 = params_[0];
    std::vector<double> w(w0.data().begin(), w0.data().end());
    const std::size_t fan_out = w0.shape()[1];
    const std::size_t k_begin = config_.data_dim + config_.time_features;
    for (std::size_t r = k_begin; r < k_begin + config_.k_features; ++r) {
      std::fill_n(w.begin() + r * fan_out, fan_out, 0.0);
    }
    out.params_[0] = ad::Tensor::from(w0.shape(), std::move(w), true);
  }
  out.k_conditioning_ = k_conditioning;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void write_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  os.write(buf, 8);
}

double read_le(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw std::runtime_error("checkpoint: truncated parameter block");
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void save_checkpoint(const DenoiserNet& net, const NoiseSchedule& schedule,
                     const std::filesystem::path& path, const std::vector<int>& trained_steps) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  const auto& c = net.config();
  os << "TDMNET " << kCheckpointVersion << "\n";
  os << "role " << to_string(net.role()) << "\n";
  os << "data_dim " << c.data_dim << "\n";
  os << "hidden";
  for (auto h : c.hidden) os << ' ' << h;
  os << "\n";
  os << "time_features " << c.time_features << "\n";
  os << "k_features " << c.k_features << "\n";
  os << "k_conditioning " << (net.k_conditioning() ? 1 : 0) << "\n";
  os << "sigma_data " << format_double(c.sigma_data) << "\n";
  os << "schedule " << schedule.family() << " " << format_double(schedule.terminal_time()) << "\n";
  if (!trained_steps.empty()) {
    os << "trained_steps";
    for (int k : trained_steps) os << ' ' << k;
    os << "\n";
  }
  os << "param_count " << net.parameter_count() << "\n";
  os << "end\n";
  for (const auto& p : net.parameters()) {
    for (double v : p.data()) write_le(os, v);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  {
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != "TDMNET") throw std::runtime_error("checkpoint: bad magic in " + path.string());
    if (version != kCheckpointVersion) {
      throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
  }
  NetConfig cfg;
  cfg.hidden.clear();
  Role role = Role::teacher;
  bool k_cond = false;
  double terminal = 0.0;
  std::size_t count = 0;
  std::vector<int> trained;
  while (std::getline(is, line)) {
    if (line == "end") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "role") {
      std::string r;
      ls >> r;
      role = role_from_string(r);
    } else if (key == "data_dim") {
      ls >> cfg.data_dim;
    } else if (key == "hidden") {
      std::size_t h;
      while (ls >> h) cfg.hidden.push_back(h);
    } else if (key == "time_features") {
      ls >> cfg.time_features;
    } else if (key == "k_features") {
      ls >> cfg.k_features;
    } else if (key == "k_conditioning") {
      int v = 0;
      ls >> v;
      k_cond = v != 0;
    } else if (key == "sigma_data") {
      ls >> cfg.sigma_data;
    } else if (key == "schedule") {
      std::string family;
      ls >> family >> terminal;
      if (family != "linear") throw std::runtime_error("checkpoint: unknown schedule " + family);
    } else if (key == "trained_steps") {
      int k;
      while (ls >> k) trained.push_back(k);
    } else if (key == "param_count") {
      ls >> count;
    } else {
      throw std::runtime_error("checkpoint: unknown header field '" + key + "'");
    }
  }
  if (line != "end") throw std::runtime_error("checkpoint: missing header terminator");

  DenoiserNet net(cfg, role, k_cond, 0);
  if (net.parameter_count() != count) {
    throw std::runtime_error("checkpoint: parameter count does not match architecture");
  }
  std::vector<ad::Tensor> params;
  for (const auto& p : net.parameters()) {
    std::vector<double> v(p.numel());
    for (double& x : v) x = read_le(is);
    params.push_back(ad::Tensor::from(p.shape(), std::move(v), true));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("checkpoint: trailing bytes after parameters");
  }
  net.set_parameters(std::move(params));
  return {std::move(net), NoiseSchedule(terminal), std::move(trained)};
}

}  // namespace tdm
