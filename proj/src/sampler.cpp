#include "tdm/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace tdm {

std::string to_string(Solver s) { return s == Solver::euler ? "euler" : "heun"; }

Solver solver_from_string(const std::string& name) {
  if (name == "euler" || name == "ddim") return Solver::euler;
  if (name == "heun") return Solver::heun;
  throw std::invalid_argument("unknown solver '" + name + "' (available: euler, heun)");
}

namespace {

void check_step(double t, double s, const NoiseSchedule& schedule) {
  schedule.check_time(t);
  schedule.check_time(s);
  if (!(s < t)) throw std::invalid_argument("solver step requires s < t");
}

// (x - D) / sigma
ad::Tensor drift(const ad::Tensor& x, const ad::Tensor& denoised, double sigma) {
  return ad::scale(ad::sub(x, denoised), 1.0 / sigma);
}

}  // namespace

StepOutput euler_step(const ad::Tensor& x_t, double t, double s, const NoiseSchedule& schedule,
                      const DenoiseFn& denoiser) {
  check_step(t, s, schedule);
  const double sig_t = schedule.sigma(t);
  const double sig_s = schedule.sigma(s);
  ad::Tensor clean = denoiser(x_t, sig_t);
  if (s == 0.0) return {clean, clean};
  const double ratio = sig_s / sig_t;
  ad::Tensor next = ad::add(ad::scale(x_t, ratio), ad::scale(clean, 1.0 - ratio));
  return {next, clean};
}

StepOutput heun_step(const ad::Tensor& x_t, double t, double s, const NoiseSchedule& schedule,
                     const DenoiseFn& denoiser) {
  check_step(t, s, schedule);
  if (s == 0.0) return euler_step(x_t, t, s, schedule, denoiser);
  const double sig_t = schedule.sigma(t);
  const double sig_s = schedule.sigma(s);
  const double h = sig_s - sig_t;
  ad::Tensor clean = denoiser(x_t, sig_t);
  ad::Tensor d1 = drift(x_t, clean, sig_t);
  ad::Tensor x_pred = ad::add(x_t, ad::scale(d1, h));
  ad::Tensor d2 = drift(x_pred, denoiser(x_pred, sig_s), sig_s);
  ad::Tensor next = ad::add(x_t, ad::scale(ad::add(d1, d2), 0.5 * h));
  return {next, clean};
}

StepOutput solver_step(Solver solver, const ad::Tensor& x_t, double t, double s,
                       const NoiseSchedule& schedule, const DenoiseFn& denoiser) {
  return solver == Solver::euler ? euler_step(x_t, t, s, schedule, denoiser)
                                 : heun_step(x_t, t, s, schedule, denoiser);
}

double exact_gaussian_ode_map(double x_T, double data_std, double terminal_time) {
  return x_T * data_std / std::sqrt(data_std * data_std + terminal_time * terminal_time);
}

ad::Tensor solve_ode(const ad::Tensor& x_T, int steps, Solver solver,
                     const NoiseSchedule& schedule, const DenoiseFn& denoiser) {
  const IntervalPartition p = partition(steps, schedule.terminal_time());
  ad::Tensor x = x_T;
  for (int i = steps - 1; i >= 0; --i) {
    x = solver_step(solver, x, p.upper(i), p.lower(i), schedule, denoiser).next;
  }
  return x;
}

const ad::Tensor& TrajectoryRecord::point_at(std::size_t i) const {
  const std::size_t k = static_cast<std::size_t>(partition.steps);
  if (i > k) throw std::out_of_range("trajectory: boundary index out of range");
  if (i == k) return start;
  return points[k - 1 - i];
}

const ad::Tensor& TrajectoryRecord::clean_at(std::size_t i) const {
  const std::size_t k = static_cast<std::size_t>(partition.steps);
  if (i >= k) throw std::out_of_range("trajectory: boundary index out of range");
  return clean[k - 1 - i];
}

TrajectoryRecord sample_trajectory(const DenoiseFn& denoiser, const IntervalPartition& partition,
                                   const NoiseSchedule& schedule, const ad::Tensor& x_T,
                                   std::optional<std::size_t> grad_step, Solver solver) {
  const int k = partition.steps;
  if (k < 1) throw std::invalid_argument("sample_trajectory: K must be >= 1");
  if (grad_step && *grad_step >= static_cast<std::size_t>(k)) {
    throw std::out_of_range("sample_trajectory: grad_step_index out of range");
  }
  if (partition.terminal_time != schedule.terminal_time()) {
    throw std::invalid_argument("sample_trajectory: partition and schedule disagree on T");
  }
  TrajectoryRecord rec;
  rec.partition = partition;
  rec.start = ad::detach(x_T);
  ad::Tensor x = rec.start;
  for (int i = k - 1; i >= 0; --i) {
    const bool flagged = grad_step && *grad_step == static_cast<std::size_t>(i);
    StepOutput out;
    if (flagged) {
      out = solver_step(solver, ad::detach(x), partition.upper(i), partition.lower(i), schedule,
                        denoiser);
    } else {
      ad::NoGradGuard guard;
      out = solver_step(solver, x, partition.upper(i), partition.lower(i), schedule, denoiser);
    }
    rec.times.push_back(partition.lower(i));
    rec.points.push_back(out.next);
    rec.clean.push_back(out.clean);
    rec.carries_grad.push_back(flagged);
    x = out.next;
  }
  return rec;
}

ad::Tensor prior_sample(std::size_t n, std::size_t dim, const NoiseSchedule& schedule, Rng& rng) {
  Samples eps = standard_normal(n, dim, rng);
  return to_tensor(eps * schedule.sigma_max());
}

TrajectoryRecord sample_trajectory(const DenoiseFn& denoiser, const IntervalPartition& partition,
                                   const NoiseSchedule& schedule, std::size_t n, std::size_t dim,
                                   std::uint64_t seed, std::optional<std::size_t> grad_step,
                                   Solver solver) {
  Rng rng(seed);
  return sample_trajectory(denoiser, partition, schedule, prior_sample(n, dim, schedule, rng),
                           grad_step, solver);
}

}  // namespace tdm
