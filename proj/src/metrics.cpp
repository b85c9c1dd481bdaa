#include "tdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tdm/partition.hpp"

namespace tdm {

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  // Walk the merged quantile breakpoints i / na and j / nb.
  std::size_t i = 0, j = 0;
  double u = 0.0, acc = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    const double diff = a[i] - b[j];
    acc += (next - u) * diff * diff;
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return std::sqrt(acc);
}

double sliced_wasserstein(const Samples& a, const Samples& b, int projections, Rng& rng) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("sliced_wasserstein: empty sample set");
  if (static_cast<std::size_t>(a.rows()) < kMinMetricSamples ||
      static_cast<std::size_t>(b.rows()) < kMinMetricSamples) {
    throw std::invalid_argument("sliced_wasserstein: need at least 100 points per set");
  }
  if (a.cols() != b.cols()) throw std::invalid_argument("sliced_wasserstein: dimension mismatch");
  if (projections < 1) throw std::invalid_argument("sliced_wasserstein: projections must be >= 1");
  std::normal_distribution<double> normal;
  double total = 0.0;
  Eigen::VectorXd dir(a.cols());
  for (int p = 0; p < projections; ++p) {
    do {
      for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = normal(rng);
    } while (dir.norm() == 0.0);
    dir.normalize();
    const Eigen::VectorXd pa = a * dir;
    const Eigen::VectorXd pb = b * dir;
    total += wasserstein_1d(std::vector<double>(pa.data(), pa.data() + pa.size()),
                            std::vector<double>(pb.data(), pb.data() + pb.size()));
  }
  return total / projections;
}

GridKL grid_kl_vs_analytic(const Samples& samples, const GaussianMixture& gmm, double t,
                           const NoiseSchedule& schedule, const GridSpec& grid) {
  grid.validate();
  schedule.check_time(t);
  if (samples.rows() == 0) throw std::invalid_argument("grid_kl: empty sample set");
  if (static_cast<std::size_t>(samples.cols()) != grid.dim() || grid.dim() != gmm.dim()) {
    throw std::invalid_argument("grid_kl: dimension mismatch");
  }
  const std::size_t cells = grid.cell_count();
  std::vector<double> hist(cells, 1.0);
  std::size_t inside = 0;
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    const long c = grid.cell_of(samples.row(r).data());
    if (c < 0) continue;
    hist[static_cast<std::size_t>(c)] += 1.0;
    ++inside;
  }
  const double hist_total = static_cast<double>(inside + cells);

  const double sigma = schedule.sigma(t);
  const Samples centers = grid.centers();
  std::vector<double> logq(cells);
  double max_logq = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells; ++c) {
    logq[c] = gmm.log_density(centers.row(c).transpose(), sigma);
    max_logq = std::max(max_logq, logq[c]);
  }
  double q_total = 0.0;
  for (double& v : logq) q_total += std::exp(v - max_logq);
  const double log_q_norm = max_logq + std::log(q_total);

  double kl = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double p = hist[c] / hist_total;
    kl += p * (std::log(p) - (logq[c] - log_q_norm));
  }
  GridKL out;
  out.kl = std::max(kl, 0.0);
  out.out_of_bounds = 1.0 - static_cast<double>(inside) / static_cast<double>(samples.rows());
  return out;
}

double grid_kl_floor(const GaussianMixture& gmm, double t, const NoiseSchedule& schedule,
                     const GridSpec& grid, std::size_t n, Rng& rng) {
  return grid_kl_vs_analytic(gmm.sample_diffused(n, schedule.sigma(t), rng), gmm, t, schedule,
                             grid)
      .kl;
}

std::vector<double> trajectory_marginal_distance(const TrajectoryRecord& record,
                                                 const GaussianMixture& gmm,
                                                 const IntervalPartition& partition,
                                                 const NoiseSchedule& schedule, int projections,
                                                 Rng& rng) {
  if (record.partition.steps != partition.steps ||
      record.partition.boundaries != partition.boundaries) {
    throw std::invalid_argument("trajectory_marginal_distance: partition does not match records");
  }
  const std::size_t n = record.start.rows();
  if (n < 1000) {
    throw std::invalid_argument("trajectory_marginal_distance: need at least 1000 trajectories");
  }
  std::vector<double> out;
  for (int i = 0; i <= partition.steps; ++i) {
    const Samples exact = gmm.sample_diffused(n, schedule.sigma(partition.boundaries[i]), rng);
    out.push_back(sliced_wasserstein(to_samples(record.point_at(i)), exact, projections, rng));
  }
  return out;
}

std::vector<double> trajectory_marginal_floors(const GaussianMixture& gmm,
                                               const IntervalPartition& partition,
                                               const NoiseSchedule& schedule, std::size_t n,
                                               int projections, Rng& rng) {
  std::vector<double> out;
  for (int i = 0; i <= partition.steps; ++i) {
    const double sigma = schedule.sigma(partition.boundaries[i]);
    const Samples a = gmm.sample_diffused(n, sigma, rng);
    const Samples b = gmm.sample_diffused(n, sigma, rng);
    out.push_back(sliced_wasserstein(a, b, projections, rng));
  }
  return out;
}

ModeCoverage mode_coverage(const Samples& samples, const GaussianMixture& gmm,
                           double radius_in_std, double min_fraction) {
  if (samples.rows() == 0) throw std::invalid_argument("mode_coverage: empty sample set");
  if (!(radius_in_std > 0.0)) throw std::invalid_argument("mode_coverage: radius must be > 0");
  if (static_cast<std::size_t>(samples.cols()) != gmm.dim()) {
    throw std::invalid_argument("mode_coverage: dimension mismatch");
  }
  const auto& comps = gmm.components();
  ModeCoverage out;
  out.counts.assign(comps.size(), 0);
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < comps.size(); ++j) {
      const double dist = (samples.row(r).transpose() - comps[j].mean).norm();
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    if (best_d <= radius_in_std * gmm.component_std(best)) {
      ++out.counts[best];
    } else {
      ++out.unassigned;
    }
  }
  const double need = min_fraction * static_cast<double>(samples.rows());
  for (std::size_t c : out.counts) {
    if (static_cast<double>(c) >= need) ++out.covered;
  }
  return out;
}

// ---------------------------------------------------------------------------

void MetricReport::set(const std::string& name, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("metric '" + name + "' is not finite");
  for (auto& [k, v] : metrics_) {
    if (k == name) {
      v = value;
      return;
    }
  }
  metrics_.emplace_back(name, value);
}

void MetricReport::label(const std::string& name, const std::string& value) {
  for (auto& [k, v] : labels_) {
    if (k == name) {
      v = value;
      return;
    }
  }
  labels_.emplace_back(name, value);
}

double MetricReport::get(const std::string& name) const {
  for (const auto& [k, v] : metrics_) {
    if (k == name) return v;
  }
  throw std::out_of_range("no metric named '" + name + "'");
}

bool MetricReport::has(const std::string& name) const {
  return std::any_of(metrics_.begin(), metrics_.end(),
                     [&](const auto& kv) { return kv.first == name; });
}

std::string MetricReport::csv_header() const {
  std::ostringstream os;
  os << "seed,n_samples,config_digest";
  for (const auto& kv : labels_) os << ',' << kv.first;
  for (const auto& kv : metrics_) os << ',' << kv.first;
  return os.str();
}

std::string MetricReport::csv_row() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << seed << ',' << n_samples << ',' << config_digest;
  for (const auto& kv : labels_) os << ',' << kv.second;
  for (const auto& kv : metrics_) os << ',' << kv.second;
  return os.str();
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["n_samples"] = n_samples;
  j["config_digest"] = config_digest;
  for (const auto& [k, v] : labels_) j["labels"][k] = v;
  for (const auto& [k, v] : metrics_) j["metrics"][k] = v;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

MetricReport evaluate_sampler(const DenoiseFn& denoiser, const GaussianMixture& gmm,
                              const NoiseSchedule& schedule, const EvalRequest& req) {
  const std::size_t n = req.n_samples;
  const std::size_t d = gmm.dim();
  const IntervalPartition part = partition(req.steps, schedule.terminal_time());
  const GridSpec grid = GridSpec::around(gmm);

  // independent streams so adding a metric never shifts another one
  Rng prior_rng(req.seed);
  Rng ref_rng(req.seed + 0x9e3779b97f4a7c15ULL);
  Rng proj_rng(req.seed + 0x3c6ef372fe94f82aULL);

  MetricReport rep;
  rep.seed = req.seed;
  rep.n_samples = n;
  rep.label("steps", std::to_string(req.steps));
  rep.label("solver", to_string(req.solver));

  ad::NoGradGuard guard;
  const ad::Tensor x_T = prior_sample(n, d, schedule, prior_rng);
  const TrajectoryRecord rec =
      sample_trajectory(denoiser, part, schedule, x_T, std::nullopt, req.solver);
  const Samples x0 = to_samples(rec.point_at(0));

  const Samples ref = gmm.sample(n, ref_rng);
  rep.set("sliced_w2", sliced_wasserstein(x0, ref, req.projections, proj_rng));
  rep.set("sliced_w2_floor",
          sliced_wasserstein(gmm.sample(n, ref_rng), ref, req.projections, proj_rng));
  const GridKL kl = grid_kl_vs_analytic(x0, gmm, 0.0, schedule, grid);
  rep.set("grid_kl", kl.kl);
  rep.set("grid_kl_floor", grid_kl_floor(gmm, 0.0, schedule, grid, n, ref_rng));
  rep.set("out_of_bounds", kl.out_of_bounds);
  const ModeCoverage cov = mode_coverage(x0, gmm);
  rep.set("modes_covered", static_cast<double>(cov.covered));
  rep.set("modes_total", static_cast<double>(gmm.size()));

  const auto traj = trajectory_marginal_distance(rec, gmm, part, schedule, req.projections, proj_rng);
  const auto floors =
      trajectory_marginal_floors(gmm, part, schedule, n, req.projections, proj_rng);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    rep.set("traj_sw_" + std::to_string(i), traj[i]);
    rep.set("traj_floor_" + std::to_string(i), floors[i]);
  }

  if (req.teacher) {
    Rng teacher_rng(req.seed + 0xdaa66d2c7ddf743fULL);
    const ad::Tensor t_T = prior_sample(n, d, schedule, teacher_rng);
    const Samples tx0 =
        to_samples(solve_ode(t_T, req.teacher_steps, Solver::heun, schedule, *req.teacher));
    rep.set("teacher_sliced_w2", sliced_wasserstein(tx0, ref, req.projections, proj_rng));
  }
  return rep;
}

}  // namespace tdm
