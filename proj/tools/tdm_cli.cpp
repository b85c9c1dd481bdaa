#include <exception>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "tdm/commands.hpp"

namespace {

void add_common(CLI::App* sub, tdm::CommandOptions& o) {
  sub->add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Override the config seed");
  sub->add_option("--out", o.out, "Output directory (default: <root>/<name>-<digest>-s<seed>)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory distribution matching on low-dimensional Gaussian mixtures"};
  app.require_subcommand(1);
  tdm::CommandOptions o;
  std::function<int(const tdm::CommandOptions&, std::ostream&)> action;

  auto* teach = app.add_subcommand("teach", "Train a teacher denoiser on the configured dataset");
  add_common(teach, o);
  teach->add_option("--iterations", o.iterations, "Override teacher iterations");
  teach->callback([&] { action = tdm::cmd_teach; });

  auto* distill = app.add_subcommand("distill", "Distill a few-step student from a teacher");
  add_common(distill, o);
  distill->add_option("--teacher", o.teacher, "Teacher checkpoint")->required();
  distill->add_option("--mode", o.mode, "tdm-l2, tdm-huber, tdm-unify, clean-matching, instance-traj");
  distill->add_option("--steps", o.steps, "Sampling steps K");
  distill->add_option("--solver", o.solver, "euler or heun");
  distill->add_option("--iterations", o.iterations, "Override distillation iterations");
  distill->add_option("--n", o.n_samples, "Evaluation samples");
  distill->callback([&] { action = tdm::cmd_distill; });

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against the analytic data");
  add_common(eval, o);
  eval->add_option("--student", o.student, "Checkpoint to evaluate")->required();
  eval->add_option("--teacher", o.teacher, "Teacher checkpoint for the 64-step floor");
  eval->add_option("--steps", o.steps, "Sampling steps K");
  eval->add_option("--solver", o.solver, "euler or heun");
  eval->add_option("--n", o.n_samples, "Evaluation samples (default 10000)");
  eval->callback([&] { action = tdm::cmd_eval; });

  auto* plot = app.add_subcommand("plot", "Render SVG plots for a run directory");
  plot->add_option("--run", o.run, "Run directory")->required();
  plot->add_option("--out", o.out, "Output directory (default: <run>-plots)");
  plot->callback([&] { action = tdm::cmd_plot; });

  auto* ablate = app.add_subcommand("ablate", "Run a matched ablation suite");
  add_common(ablate, o);
  ablate->add_option("--suite", o.suite,
                     "importance, unify, clean-vs-noisy, solver-cross, shared-fake")
      ->required();
  ablate->add_option("--teacher", o.teacher, "Teacher checkpoint");
  ablate->add_option("--seeds", o.seeds, "Number of consecutive seeds (default 5)");
  ablate->add_option("--iterations", o.iterations, "Override distillation iterations");
  ablate->add_option("--n", o.n_samples, "Evaluation samples");
  ablate->add_option("--solver", o.solver, "euler or heun");
  ablate->callback([&] { action = tdm::cmd_ablate; });

  CLI11_PARSE(app, argc, argv);
  try {
    return action(o, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
