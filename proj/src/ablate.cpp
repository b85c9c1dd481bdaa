#include "tdm/ablate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tdm/commands.hpp"
#include "tdm/runlog.hpp"
#include "tdm/shared_fake.hpp"

namespace tdm {

namespace {

RunConfig tdm_variant(const RunConfig& base) {
  RunConfig c = base;
  if (c.distill.mode != DistillMode::tdm_l2) c.distill.mode = DistillMode::tdm_huber;
  return c;
}

std::string eval_key(const RunConfig& config, int steps, Solver solver) {
  return config_digest(config) + "/" + std::to_string(steps) + "/" + to_string(solver);
}

const VariantResult& find_row(const std::vector<VariantResult>& rows, const std::string& variant,
                              std::uint64_t seed, const std::string& test_solver = "") {
  for (const auto& r : rows) {
    if (r.variant == variant && r.seed == seed && (test_solver.empty() || r.test_solver == test_solver)) {
      return r;
    }
  }
  throw std::logic_error("ablation: missing row " + variant);
}

double metric(const VariantResult& r, int steps, const std::string& name) {
  return r.reports.at(steps).get(name);
}

}  // namespace

std::vector<std::string> ablation_suites() {
  return {"importance", "unify", "clean-vs-noisy", "solver-cross", "shared-fake"};
}

void check_suite(const std::string& suite) {
  const auto names = ablation_suites();
  if (std::find(names.begin(), names.end(), suite) != names.end()) return;
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown ablation suite '" + suite + "' (available: " + list + ")");
}

std::size_t required_majority(std::size_t n_seeds) {
  return static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(n_seeds) - 1e-12));
}

std::size_t OrderingCheck::holds() const {
  return static_cast<std::size_t>(std::count(per_seed.begin(), per_seed.end(), true));
}

bool AblationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const OrderingCheck& c) { return c.passed(); });
}

std::string AblationReport::table() const {
  std::ostringstream os;
  char line[256];
  if (!rows.empty()) {
    std::snprintf(line, sizeof line, "%-18s %6s %5s %6s %11s %11s %6s\n", "variant", "seed", "K",
                  "test", "sliced_w2", "grid_kl", "modes");
    os << line;
    for (const auto& r : rows) {
      for (const auto& [k, rep] : r.reports) {
        std::snprintf(line, sizeof line, "%-18s %6llu %5d %6s %11.5f %11.5f %3.0f/%.0f%s\n",
                      r.variant.c_str(), static_cast<unsigned long long>(r.seed), k,
                      r.test_solver.c_str(), rep.get("sliced_w2"), rep.get("grid_kl"),
                      rep.get("modes_covered"), rep.get("modes_total"),
                      r.diverged ? " diverged" : "");
        os << line;
      }
    }
  }
  for (const auto& [name, v] : scalars) os << name << " = " << format_number(v) << "\n";
  for (const auto& c : checks) {
    os << (c.passed() ? "holds   " : "fails   ") << c.claim << ": " << c.holds() << "/"
       << c.per_seed.size() << " (need " << c.required << ")\n";
  }
  return os.str();
}

std::string AblationReport::to_csv() const {
  std::ostringstream os;
  os << "variant,seed,steps,test_solver,sliced_w2,sliced_w2_floor,grid_kl,grid_kl_floor,"
        "modes_covered,diverged\n";
  for (const auto& r : rows) {
    for (const auto& [k, rep] : r.reports) {
      os << r.variant << "," << r.seed << "," << k << "," << r.test_solver << ","
         << format_number(rep.get("sliced_w2")) << "," << format_number(rep.get("sliced_w2_floor"))
         << "," << format_number(rep.get("grid_kl")) << ","
         << format_number(rep.get("grid_kl_floor")) << ","
         << format_number(rep.get("modes_covered")) << "," << (r.diverged ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

std::string AblationReport::to_json() const {
  nlohmann::ordered_json j;
  j["suite"] = suite;
  j["seeds"] = seeds;
  j["iterations"] = iterations;
  for (const auto& [name, v] : scalars) j["scalars"][name] = v;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"claim", c.claim},
                           {"per_seed", c.per_seed},
                           {"holds", c.holds()},
                           {"required", c.required},
                           {"passed", c.passed()}});
  }
  j["passed"] = passed();
  return j.dump(2) + "\n";
}

AblationRunner::AblationRunner(DenoiserNet teacher, std::ostream* progress)
    : teacher_(std::move(teacher)), progress_(progress) {}

const AblationRunner::Trained& AblationRunner::train(const RunConfig& config) {
  const std::string key = config_digest(config);
  auto it = trained_.find(key);
  if (it != trained_.end()) return it->second;
  if (progress_) {
    *progress_ << "[ablate] training " << to_string(config.distill.mode) << " seed " << config.seed
               << " (" << config.distill.iterations << " iterations)\n";
  }
  DistillOutcome res = run_distillation(config, teacher_, nullptr, nullptr);
  Trained t{std::move(res.student), res.trained_steps, res.diverged};
  return trained_.emplace(key, std::move(t)).first->second;
}

VariantResult AblationRunner::variant(const std::string& name, const RunConfig& config,
                                      const std::vector<int>& eval_steps, Solver test_solver) {
  const Trained& t = train(config);
  VariantResult r;
  r.variant = name;
  r.seed = config.seed;
  r.test_solver = to_string(test_solver);
  r.diverged = t.diverged;
  for (int k : eval_steps) {
    const std::string key = eval_key(config, k, test_solver);
    auto it = evaluated_.find(key);
    if (it == evaluated_.end()) {
      MetricReport rep = evaluate_student(t.student, t.trained_steps, config, k, test_solver,
                                          config.eval.n_samples, config.seed, nullptr);
      it = evaluated_.emplace(key, std::move(rep)).first;
    }
    r.reports.emplace(k, it->second);
  }
  return r;
}

AblationReport AblationRunner::run(const std::string& suite, const RunConfig& base,
                                   const std::vector<std::uint64_t>& seeds) {
  check_suite(suite);
  if (seeds.empty()) throw std::invalid_argument("ablation needs at least one seed");

  AblationReport rep;
  rep.suite = suite;
  rep.seeds = seeds;
  rep.iterations = base.distill.iterations;
  const std::size_t need = required_majority(seeds.size());
  auto seeded = [](RunConfig c, std::uint64_t s) {
    c.seed = s;
    return c;
  };

  if (suite == "importance") {
    OrderingCheck order{"with importance weights beats weight = 1 at K=4 (sliced-W2 and modes)", {}, need};
    OrderingCheck cover{"default TDM covers every mode at K=4", {}, need};
    for (auto s : seeds) {
      RunConfig with = seeded(tdm_variant(base), s);
      with.distill.steps = {4};
      RunConfig without = with;
      without.distill.importance_weights = false;
      rep.rows.push_back(variant("tdm", with, {4}, with.distill.solver));
      rep.rows.push_back(variant("no-importance", without, {4}, with.distill.solver));
      const auto& a = find_row(rep.rows, "tdm", s);
      const auto& b = find_row(rep.rows, "no-importance", s);
      order.per_seed.push_back(metric(a, 4, "sliced_w2") < metric(b, 4, "sliced_w2") &&
                               metric(a, 4, "modes_covered") >= metric(b, 4, "modes_covered"));
      cover.per_seed.push_back(metric(a, 4, "modes_covered") == metric(a, 4, "modes_total"));
    }
    rep.checks = {order, cover};
  } else if (suite == "unify") {
    OrderingCheck one{"unified beats K=4-only at 1 step on grid-KL", {}, need};
    OrderingCheck two{"unified beats K=4-only at 2 steps on grid-KL", {}, need};
    for (auto s : seeds) {
      RunConfig single = seeded(tdm_variant(base), s);
      single.distill.steps = {4};
      RunConfig unified = seeded(base, s);
      unified.distill.mode = DistillMode::tdm_unify;
      rep.rows.push_back(variant("tdm", single, {1, 2, 4}, single.distill.solver));
      rep.rows.push_back(variant("tdm-unify", unified, {1, 2, 4}, unified.distill.solver));
      const auto& a = find_row(rep.rows, "tdm-unify", s);
      const auto& b = find_row(rep.rows, "tdm", s);
      one.per_seed.push_back(metric(a, 1, "grid_kl") < metric(b, 1, "grid_kl"));
      two.per_seed.push_back(metric(a, 2, "grid_kl") < metric(b, 2, "grid_kl"));
    }
    rep.checks = {one, two};
  } else if (suite == "clean-vs-noisy") {
    OrderingCheck order{"noisy-trajectory matching beats clean matching at K=4 on grid-KL", {}, need};
    for (auto s : seeds) {
      RunConfig noisy = seeded(tdm_variant(base), s);
      noisy.distill.steps = {4};
      RunConfig clean = noisy;
      clean.distill.mode = DistillMode::clean_matching;
      rep.rows.push_back(variant("tdm", noisy, {4}, noisy.distill.solver));
      rep.rows.push_back(variant("clean-matching", clean, {4}, clean.distill.solver));
      order.per_seed.push_back(metric(find_row(rep.rows, "tdm", s), 4, "grid_kl") <
                               metric(find_row(rep.rows, "clean-matching", s), 4, "grid_kl"));
    }
    rep.checks = {order};
  } else if (suite == "solver-cross") {
    for (auto s : seeds) {
      for (Solver train : {Solver::euler, Solver::heun}) {
        RunConfig c = seeded(tdm_variant(base), s);
        c.distill.steps = {4};
        c.distill.solver = train;
        for (Solver test : {Solver::euler, Solver::heun}) {
          rep.rows.push_back(variant("train-" + to_string(train), c, {4}, test));
        }
      }
    }
  } else {
    OrderingCheck blend{"trained shared score within 5% of the blend formula", {}, need};
    OrderingCheck gap{"shared score differs from both component scores by > 20% on the overlap", {}, need};
    for (auto s : seeds) {
      SharedFakeConfig sc;
      sc.seed = s;
      if (progress_) *progress_ << "[ablate] shared-fake seed " << s << "\n";
      const SharedFakeResult r = run_shared_fake_experiment(sc);
      const std::string tag = "_s" + std::to_string(s);
      rep.scalars.emplace_back("blend_error" + tag, r.blend_error);
      rep.scalars.emplace_back("gap_first" + tag, r.gap_first);
      rep.scalars.emplace_back("gap_second" + tag, r.gap_second);
      blend.per_seed.push_back(r.blend_error <= 0.05);
      gap.per_seed.push_back(r.gap_first > 0.2 && r.gap_second > 0.2);
    }
    rep.iterations = SharedFakeConfig{}.iterations;
    rep.checks = {blend, gap};
  }
  return rep;
}

}  // namespace tdm
