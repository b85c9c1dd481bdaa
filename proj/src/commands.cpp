#include "tdm/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tdm/ablate.hpp"
#include "tdm/baselines.hpp"
#include "tdm/distill.hpp"
#include "tdm/grid.hpp"
#include "tdm/partition.hpp"
#include "tdm/runlog.hpp"
#include "tdm/svg.hpp"
#include "tdm/teacher.hpp"

namespace tdm {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kMaxConsecutiveSkips = 100;
constexpr std::size_t kDumpSamples = 2000;
constexpr int kTeacherDumpSteps = 4;
constexpr int kTeacherDumpSubsteps = 16;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string file_digest(const fs::path& p) { return fnv1a_hex(read_file(p)); }

// The manifest is written before any log row and rewritten once at the end.
class Manifest {
 public:
  Manifest(fs::path dir, const std::string& command, const RunConfig& config)
      : path_(std::move(dir) / "manifest.json") {
    doc_["tool"] = "tdm";
    doc_["version"] = kToolVersion;
    doc_["log_version"] = kRunLogVersion;
    doc_["checkpoint_version"] = kCheckpointVersion;
    doc_["command"] = command;
    doc_["config_digest"] = config_digest(config);
    doc_["seed"] = config.seed;
    doc_["status"] = "running";
    flush();
  }

  ordered_json& doc() { return doc_; }

  void finish(const std::string& status, double seconds) {
    doc_["status"] = status;
    doc_["wall_clock_seconds"] = seconds;
    flush();
  }

  void flush() { write_file_atomic(path_, doc_.dump(2) + "\n"); }

 private:
  fs::path path_;
  ordered_json doc_;
};

void write_samples(const fs::path& path, const std::vector<double>& times,
                   const std::vector<Samples>& points) {
  std::ostringstream os;
  os << "# tdm-samples v1\n";
  const Eigen::Index d = points.empty() ? 0 : points.front().cols();
  os << "boundary,t";
  for (Eigen::Index c = 0; c < d; ++c) os << ",x" << c + 1;
  os << "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (Eigen::Index r = 0; r < points[i].rows(); ++r) {
      os << i << ',' << format_number(times[i]);
      for (Eigen::Index c = 0; c < d; ++c) os << ',' << format_number(points[i](r, c));
      os << "\n";
    }
  }
  write_file_atomic(path, os.str());
}

struct SampleDump {
  std::vector<double> times;
  std::vector<Samples> points;
};

SampleDump read_samples(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("missing sample dump " + path.string());
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "# tdm-samples v1") {
    throw std::runtime_error(path.string() + ": not a tdm sample dump");
  }
  std::getline(in, line);
  const auto cols = std::count(line.begin(), line.end(), ',') - 1;
  if (cols < 2) throw std::runtime_error(path.string() + ": need at least two coordinates");
  std::map<int, std::vector<std::vector<double>>> rows;
  std::map<int, double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    const int b = std::stoi(cell);
    std::getline(ls, cell, ',');
    times[b] = std::stod(cell);
    std::vector<double> x;
    while (std::getline(ls, cell, ',')) x.push_back(std::stod(cell));
    if (static_cast<long>(x.size()) != cols) throw std::runtime_error(path.string() + ": ragged row");
    rows[b].push_back(std::move(x));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": no samples");
  SampleDump dump;
  int expect = 0;
  for (const auto& [b, pts] : rows) {
    if (b != expect++) throw std::runtime_error(path.string() + ": boundaries are not contiguous");
    Samples s(pts.size(), cols);
    for (std::size_t r = 0; r < pts.size(); ++r) {
      for (long c = 0; c < cols; ++c) s(r, c) = pts[r][c];
    }
    dump.times.push_back(times[b]);
    dump.points.push_back(std::move(s));
  }
  return dump;
}

SampleDump dump_rollout(const DenoiseFn& fn, int steps, Solver solver, int substeps,
                        const NoiseSchedule& schedule, std::size_t dim, std::uint64_t seed) {
  ad::NoGradGuard guard;
  Rng rng(seed);
  const IntervalPartition part = partition(steps, schedule.terminal_time());
  const IntervalPartition fine = partition(steps * substeps, schedule.terminal_time());
  ad::Tensor x = prior_sample(kDumpSamples, dim, schedule, rng);
  SampleDump dump;
  dump.times.assign(part.boundaries.begin(), part.boundaries.end());
  dump.points.resize(steps + 1);
  dump.points[steps] = to_samples(x);
  for (int j = steps * substeps - 1; j >= 0; --j) {
    x = solver_step(solver, x, fine.upper(j), fine.lower(j), schedule, fn).next;
    if (j % substeps == 0) dump.points[j / substeps] = to_samples(x);
  }
  return dump;
}

void check_teacher_matches(const Checkpoint& teacher, const RunConfig& config) {
  if (teacher.schedule.terminal_time() != config.terminal_time) {
    throw std::runtime_error("teacher checkpoint uses T = " +
                             format_number(teacher.schedule.terminal_time()) +
                             " but the config says T = " + format_number(config.terminal_time));
  }
  if (teacher.net.config().data_dim != config.mixture().dim()) {
    throw std::runtime_error("teacher checkpoint dimension does not match dataset " + config.dataset);
  }
}

Checkpoint load_teacher(const CommandOptions& opts, const RunConfig& config) {
  if (!opts.teacher) throw std::runtime_error("missing teacher: pass --teacher PATH");
  if (!fs::exists(*opts.teacher)) {
    throw std::runtime_error("missing teacher: " + opts.teacher->string() + " does not exist");
  }
  Checkpoint ck = load_checkpoint(*opts.teacher);
  check_teacher_matches(ck, config);
  return ck;
}

void emit_report(const fs::path& dir, const std::string& stem, const MetricReport& rep) {
  write_file_atomic(dir / (stem + ".json"), rep.to_json());
  write_file_atomic(dir / (stem + ".csv"), rep.csv_header() + "\n" + rep.csv_row() + "\n");
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig c = opts.config ? load_config(*opts.config) : RunConfig{};
  if (opts.seed) c.seed = *opts.seed;
  if (opts.mode) c.distill.mode = distill_mode_from_string(*opts.mode);
  if (opts.steps) {
    if (*opts.steps < 1) throw std::invalid_argument("--steps must be >= 1");
    c.distill.steps = {*opts.steps};
  }
  if (opts.solver) c.distill.solver = solver_from_string(*opts.solver);
  if (opts.n_samples) {
    if (*opts.n_samples < 1000) throw std::invalid_argument("--n must be >= 1000");
    c.eval.n_samples = *opts.n_samples;
  }
  return c;
}

fs::path resolve_run_dir(const CommandOptions& opts, const RunConfig& config,
                         const std::string& name) {
  if (opts.out) return *opts.out;
  const char* env = std::getenv(kOutRootEnv);
  const fs::path root = env && *env ? fs::path(env) : fs::path(config.output_root);
  return root / (name + "-" + config_digest(config).substr(0, 8) + "-s" + std::to_string(config.seed));
}

MetricReport evaluate_student(const DenoiserNet& student, const std::vector<int>& trained_steps,
                              const RunConfig& config, int steps, Solver solver,
                              std::size_t n_samples, std::uint64_t seed,
                              const DenoiserNet* teacher) {
  EvalRequest req;
  req.steps = steps;
  req.solver = solver;
  req.n_samples = n_samples;
  req.projections = config.eval.projections;
  req.seed = seed;
  if (teacher != nullptr) req.teacher = as_denoiser(*teacher);
  MetricReport rep =
      evaluate_sampler(as_denoiser(student, steps), config.mixture(), config.schedule(), req);
  const bool off = !trained_steps.empty() &&
                   std::find(trained_steps.begin(), trained_steps.end(), steps) == trained_steps.end();
  rep.label("flags", off ? "off-train-steps" : "none");
  rep.config_digest = config_digest(config);
  return rep;
}

DistillOutcome run_distillation(const RunConfig& config, const DenoiserNet& teacher,
                                const fs::path* run_dir, std::ostream* progress) {
  const NoiseSchedule schedule = config.schedule();
  const auto& ds = config.distill;
  const bool instance = ds.mode == DistillMode::instance_traj;
  DistillOutcome outcome;

  std::unique_ptr<Distiller> tdm;
  std::unique_ptr<InstanceTrajectoryTrainer> inst;
  if (instance) {
    InstanceConfig ic;
    ic.steps = ds.steps.front();
    ic.teacher_steps = ds.instance_teacher_steps;
    ic.solver = ds.solver;
    ic.pool_size = ds.instance_pool_size;
    ic.lr = ds.lr_generator;
    ic.beta1 = ds.beta1;
    ic.beta2 = ds.beta2;
    ic.clip_norm = ds.clip_norm;
    ic.batch = ds.batch;
    ic.seed = config.seed;
    inst = std::make_unique<InstanceTrajectoryTrainer>(teacher, schedule, ic);
    outcome.trained_steps = {ic.steps};
  } else {
    tdm = std::make_unique<Distiller>(teacher, schedule, config.distill_config());
    outcome.trained_steps = tdm->config().steps_list;
  }
  auto student = [&]() -> const DenoiserNet& { return instance ? inst->student() : tdm->student(); };

  std::unique_ptr<CsvLog> log, metrics_log;
  if (run_dir) {
    if (instance) {
      log = std::make_unique<CsvLog>(*run_dir / "log.csv",
                                     std::vector<std::string>{"iteration", "interval", "loss",
                                                              "grad_norm", "skipped"});
    } else {
      log = std::make_unique<CsvLog>(
          *run_dir / "log.csv",
          std::vector<std::string>{"iteration", "steps", "interval", "generator_loss", "fake_loss",
                                   "weight_mean", "weight_min", "weight_max", "weight_clipped",
                                   "correction_norm", "generator_grad_norm", "fake_grad_norm",
                                   "skipped"});
    }
    metrics_log = std::make_unique<CsvLog>(
        *run_dir / "metrics.csv",
        std::vector<std::string>{"iteration", "steps", "sliced_w2", "sliced_w2_floor", "grid_kl",
                                 "grid_kl_floor", "modes_covered"});
  }

  Stopwatch clock;
  std::vector<ad::Tensor> last_good = student().parameters();
  std::size_t consecutive_skips = 0;
  for (std::size_t it = 0; it < ds.iterations; ++it) {
    bool skipped = false;
    if (instance) {
      const InstanceMetrics m = inst->step();
      skipped = m.skipped;
      if (log && it % config.eval.log_every == 0) {
        log->append(it, std::vector<double>{static_cast<double>(m.interval), m.loss, m.grad_norm,
                                            m.skipped ? 1.0 : 0.0});
      }
    } else {
      const DistillMetrics m = tdm->step();
      skipped = m.skipped;
      if (log && it % config.eval.log_every == 0) {
        log->append(it, std::vector<double>{
                            static_cast<double>(m.steps), static_cast<double>(m.interval),
                            m.generator_loss, m.fake_loss, m.weight_mean, m.weight_min,
                            m.weight_max, static_cast<double>(m.weight_clipped), m.correction_norm,
                            m.generator_grad_norm, m.fake_grad_norm, m.skipped ? 1.0 : 0.0});
      }
    }
    outcome.iterations = it + 1;
    if (skipped) {
      ++outcome.skipped;
      if (++consecutive_skips >= kMaxConsecutiveSkips) {
        outcome.diverged = true;
        if (progress) *progress << "[distill] diverged at iteration " << it << "\n";
        break;
      }
    } else {
      consecutive_skips = 0;
      last_good = student().parameters();
    }

    const bool eval_now = (it + 1) % config.eval.every == 0;
    if (metrics_log && eval_now) {
      for (int k : outcome.trained_steps) {
        const MetricReport rep = evaluate_student(student(), outcome.trained_steps, config, k,
                                                  ds.solver, config.eval.n_samples, config.seed,
                                                  nullptr);
        metrics_log->append(it + 1, std::vector<double>{static_cast<double>(k), rep.get("sliced_w2"),
                                                        rep.get("sliced_w2_floor"), rep.get("grid_kl"),
                                                        rep.get("grid_kl_floor"),
                                                        rep.get("modes_covered")});
        if (progress) {
          *progress << "[distill] iteration " << it + 1 << " K=" << k
                    << " sliced_w2=" << format_number(rep.get("sliced_w2"))
                    << " grid_kl=" << format_number(rep.get("grid_kl")) << "\n";
        }
      }
    }
  }
  outcome.seconds_per_iteration = clock.seconds() / static_cast<double>(std::max<std::size_t>(outcome.iterations, 1));

  outcome.student = student();
  if (outcome.diverged) outcome.student.set_parameters(last_good);
  if (!instance) outcome.fake = tdm->fake();
  if (run_dir) {
    save_checkpoint(outcome.student, schedule, *run_dir / "student.ckpt", outcome.trained_steps);
    if (!instance) save_checkpoint(outcome.fake, schedule, *run_dir / "fake.ckpt", outcome.trained_steps);
  }
  return outcome;
}

// ---------------------------------------------------------------------------

int cmd_teach(const CommandOptions& opts, std::ostream& out) {
  RunConfig config = resolve_config(opts);
  if (opts.iterations) config.teacher.iterations = *opts.iterations;
  const fs::path dir = resolve_run_dir(opts, config, "teach-" + config.dataset);
  create_run_dir(dir);
  Stopwatch clock;
  write_file_atomic(dir / "config.json", canonical_json(config) + "\n");
  Manifest manifest(dir, "teach", config);

  const GaussianMixture gmm = config.mixture();
  const NoiseSchedule schedule = config.schedule();
  DenoiserNet net(config.net_config(), Role::teacher, false, config.seed);
  TeacherTrainConfig tc = config.teacher_config();
  CsvLog log(dir / "log.csv", {"iteration", "loss"});
  tc.on_log = [&](std::size_t it, double loss) { log.append(it, std::vector<double>{loss}); };
  out << "[teach] " << config.dataset << ": " << tc.iterations << " iterations, "
      << net.parameter_count() << " parameters -> " << dir.string() << "\n";
  try {
    const TeacherTrainReport rep = train_teacher(gmm_sampler(gmm), net, schedule, tc);
    manifest.doc()["skipped_steps"] = rep.skipped_steps;
  } catch (const std::runtime_error& e) {
    manifest.finish("diverged", clock.seconds());
    throw;
  }
  save_checkpoint(net, schedule, dir / "teacher.ckpt");

  MetricReport rep;
  rep.seed = config.seed;
  rep.config_digest = config_digest(config);
  rep.label("dataset", config.dataset);
  const GridSpec grid = GridSpec::around(gmm);
  const double T = schedule.terminal_time();
  for (double frac : {0.1, 0.5, 0.9}) {
    const double err = grid_score_error(net, gmm, schedule, frac * T, grid);
    rep.set("score_error_" + format_number(frac) + "T", err);
    out << "[teach] score error at t = " << format_number(frac) << "T: " << format_number(err) << "\n";
  }
  rep.n_samples = grid.cell_count();
  emit_report(dir, "report", rep);

  const SampleDump dump = dump_rollout(as_denoiser(net), kTeacherDumpSteps, Solver::heun,
                                       kTeacherDumpSubsteps, schedule, gmm.dim(), config.seed);
  write_samples(dir / "trajectory.csv", dump.times, dump.points);

  manifest.doc()["outputs"] = {{"teacher.ckpt", file_digest(dir / "teacher.ckpt")}};
  manifest.finish("complete", clock.seconds());
  return 0;
}

int cmd_distill(const CommandOptions& opts, std::ostream& out) {
  RunConfig config = resolve_config(opts);
  if (opts.iterations) config.distill.iterations = *opts.iterations;
  const Checkpoint teacher = load_teacher(opts, config);
  const fs::path dir = resolve_run_dir(opts, config, "distill-" + to_string(config.distill.mode));
  create_run_dir(dir);
  Stopwatch clock;
  write_file_atomic(dir / "config.json", canonical_json(config) + "\n");
  Manifest manifest(dir, "distill", config);
  manifest.doc()["mode"] = to_string(config.distill.mode);
  manifest.doc()["teacher_digest"] = file_digest(*opts.teacher);
  manifest.flush();
  out << "[distill] mode " << to_string(config.distill.mode) << ", " << config.distill.iterations
      << " iterations -> " << dir.string() << "\n";

  const DistillOutcome res = run_distillation(config, teacher.net, &dir, &out);
  manifest.doc()["skipped_steps"] = res.skipped;
  manifest.doc()["seconds_per_iteration"] = res.seconds_per_iteration;
  if (res.diverged) {
    manifest.finish("diverged", clock.seconds());
    throw std::runtime_error("distillation diverged; last good student kept in " +
                             (dir / "student.ckpt").string());
  }

  for (int k : res.trained_steps) {
    const MetricReport rep = evaluate_student(res.student, res.trained_steps, config, k,
                                              config.distill.solver, config.eval.n_samples,
                                              config.seed, &teacher.net);
    emit_report(dir, "report_K" + std::to_string(k), rep);
    out << "[distill] K=" << k << " sliced_w2 " << format_number(rep.get("sliced_w2"))
        << " (teacher " << format_number(rep.get("teacher_sliced_w2")) << ", exact floor "
        << format_number(rep.get("sliced_w2_floor")) << "), grid_kl "
        << format_number(rep.get("grid_kl")) << ", modes " << rep.get("modes_covered") << "/"
        << rep.get("modes_total") << "\n";
  }
  const int dump_k = *std::max_element(res.trained_steps.begin(), res.trained_steps.end());
  const SampleDump dump = dump_rollout(as_denoiser(res.student, dump_k), dump_k,
                                       config.distill.solver, 1, config.schedule(),
                                       config.mixture().dim(), config.seed);
  write_samples(dir / "trajectory.csv", dump.times, dump.points);

  manifest.doc()["outputs"] = {{"student.ckpt", file_digest(dir / "student.ckpt")}};
  manifest.finish("complete", clock.seconds());
  return 0;
}

int cmd_eval(const CommandOptions& opts, std::ostream& out) {
  const RunConfig config = resolve_config(opts);
  if (!opts.student) throw std::runtime_error("eval needs --student PATH");
  if (!fs::exists(*opts.student)) throw std::runtime_error(opts.student->string() + " does not exist");
  const Checkpoint student = load_checkpoint(*opts.student);
  check_teacher_matches(student, config);
  std::optional<Checkpoint> teacher;
  if (opts.teacher) teacher = load_teacher(opts, config);

  const int steps = opts.steps ? *opts.steps
                               : (student.trained_steps.empty() ? config.distill.steps.front()
                                                                : student.trained_steps.front());
  const Solver solver = config.distill.solver;
  const std::string student_digest = file_digest(*opts.student);
  const fs::path dir = resolve_run_dir(opts, config,
                                       "eval-" + student_digest.substr(0, 8) + "-K" +
                                           std::to_string(steps) + "-" + to_string(solver));
  create_run_dir(dir);
  Stopwatch clock;
  write_file_atomic(dir / "config.json", canonical_json(config) + "\n");
  Manifest manifest(dir, "eval", config);
  manifest.doc()["student_digest"] = student_digest;
  manifest.flush();

  MetricReport rep = evaluate_student(student.net, student.trained_steps, config, steps, solver,
                                      config.eval.n_samples, config.seed,
                                      teacher ? &teacher->net : nullptr);
  emit_report(dir, "report", rep);
  bool off = false;
  for (const auto& [k, v] : rep.labels()) off |= k == "flags" && v == "off-train-steps";
  if (off) {
    out << "[eval] warning: K=" << steps << " is outside the steps this student was trained for (off-train-steps)\n";
  }
  for (const auto& [k, v] : rep.metrics()) out << "[eval] " << k << " = " << format_number(v) << "\n";
  manifest.finish("complete", clock.seconds());
  return 0;
}

int cmd_plot(const CommandOptions& opts, std::ostream& out) {
  if (!opts.run) throw std::runtime_error("plot needs --run DIR");
  fs::path run = opts.run->lexically_normal();
  if (run.has_parent_path() && !run.has_filename()) run = run.parent_path();
  if (!fs::is_directory(run)) throw std::runtime_error(run.string() + " is not a run directory");
  const RunConfig config = parse_config(read_file(run / "config.json"), (run / "config.json").string());
  const CsvTable log = read_csv_log(run / "log.csv");
  if (log.rows.empty()) throw std::runtime_error((run / "log.csv").string() + " has no rows");
  const SampleDump dump = read_samples(run / "trajectory.csv");

  // Everything is rendered before the output directory is created.
  std::vector<std::pair<std::string, std::string>> files;
  const GaussianMixture gmm = config.mixture();
  const NoiseSchedule schedule = config.schedule();
  Rng rng(config.seed);
  const Eigen::VectorXd mu = gmm.mean();
  const double data_var = gmm.data_std() * gmm.data_std();
  for (std::size_t i = 0; i < dump.points.size(); ++i) {
    const double sigma = schedule.sigma(dump.times[i]);
    const Samples exact = gmm.sample_diffused(dump.points[i].rows(), sigma, rng);
    const double half = 4.0 * std::sqrt(data_var + sigma * sigma);
    svg::Bounds b{mu[0] - half, mu[0] + half, mu[1] - half, mu[1] + half};
    files.emplace_back("boundary_" + std::to_string(i) + ".svg",
                       svg::scatter_chart("t_" + std::to_string(i) + " = " + format_number(dump.times[i]),
                                          {{"analytic", exact}, {"sampler", dump.points[i]}}, b));
  }
  std::vector<svg::Series> losses;
  const std::vector<double> iters = log.numbers("iteration");
  for (const char* name : {"loss", "generator_loss", "fake_loss"}) {
    if (std::find(log.columns.begin(), log.columns.end(), name) != log.columns.end()) {
      losses.push_back({name, iters, log.numbers(name)});
    }
  }
  if (losses.empty()) throw std::runtime_error("log has no loss column");
  files.emplace_back("loss.svg", svg::line_chart("training loss", "iteration", "loss", losses, true));
  if (fs::exists(run / "metrics.csv")) {
    const CsvTable m = read_csv_log(run / "metrics.csv");
    if (!m.rows.empty()) {
      const auto it = m.numbers("iteration");
      const auto ks = m.numbers("steps");
      std::map<int, svg::Series> sw, kl;
      const auto swv = m.numbers("sliced_w2");
      const auto klv = m.numbers("grid_kl");
      for (std::size_t r = 0; r < it.size(); ++r) {
        const int k = static_cast<int>(ks[r]);
        sw[k].label = kl[k].label = "K=" + std::to_string(k);
        sw[k].x.push_back(it[r]);
        sw[k].y.push_back(swv[r]);
        kl[k].x.push_back(it[r]);
        kl[k].y.push_back(klv[r]);
      }
      std::vector<svg::Series> a, b;
      for (auto& [k, s] : sw) a.push_back(s);
      for (auto& [k, s] : kl) b.push_back(s);
      files.emplace_back("sliced_w2.svg", svg::line_chart("sliced W2 to data", "iteration", "sliced W2", a));
      files.emplace_back("grid_kl.svg", svg::line_chart("grid KL to data", "iteration", "KL", b));
    }
  }

  fs::path dir = opts.out ? *opts.out : fs::path(run.string() + "-plots");
  create_run_dir(dir);
  for (const auto& [name, content] : files) write_file_atomic(dir / name, content);
  out << "[plot] wrote " << files.size() << " files to " << dir.string() << "\n";
  return 0;
}

int cmd_ablate(const CommandOptions& opts, std::ostream& out) {
  if (!opts.suite) throw std::runtime_error("ablate needs --suite NAME");
  RunConfig config = resolve_config(opts);
  if (opts.iterations) config.distill.iterations = *opts.iterations;
  const int n_seeds = opts.seeds.value_or(5);
  if (n_seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(config.seed + static_cast<std::uint64_t>(i));

  check_suite(*opts.suite);
  const bool needs_teacher = *opts.suite != "shared-fake";
  std::optional<Checkpoint> teacher;
  if (needs_teacher) teacher = load_teacher(opts, config);
  const fs::path dir = resolve_run_dir(opts, config, "ablate-" + *opts.suite);
  create_run_dir(dir);
  Stopwatch clock;
  write_file_atomic(dir / "config.json", canonical_json(config) + "\n");
  Manifest manifest(dir, "ablate", config);
  manifest.doc()["suite"] = *opts.suite;
  manifest.doc()["seeds"] = seeds;
  if (teacher) manifest.doc()["teacher_digest"] = file_digest(*opts.teacher);
  manifest.flush();

  AblationRunner runner(teacher ? teacher->net : DenoiserNet{}, &out);
  const AblationReport rep = runner.run(*opts.suite, config, seeds);
  write_file_atomic(dir / "table.csv", rep.to_csv());
  write_file_atomic(dir / "verdict.json", rep.to_json());
  out << rep.table();
  manifest.doc()["passed"] = rep.passed();
  manifest.finish("complete", clock.seconds());
  return 0;
}

}  // namespace tdm
