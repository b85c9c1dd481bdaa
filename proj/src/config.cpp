#include "tdm/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tdm {

using nlohmann::json;

std::vector<std::string> distill_mode_names() {
  return {"tdm-l2", "tdm-huber", "tdm-unify", "clean-matching", "instance-traj"};
}

std::string to_string(DistillMode mode) {
  return distill_mode_names()[static_cast<std::size_t>(mode)];
}

DistillMode distill_mode_from_string(const std::string& name) {
  const auto names = distill_mode_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<DistillMode>(i);
  }
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown distill mode '" + name + "' (available: " + list + ")");
}

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers can
// be reported as unknown fields.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(field(key) + ": " + what);
  }

  std::string field(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    const json* v = find(key);
    if (v == nullptr) return;
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!v->is_number_integer() || v->get<long long>() < 0) fail(key, "expected a non-negative integer");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v->is_number_integer()) fail(key, "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) fail(key, "expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) fail(key, "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) fail(key, "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      fail(key, e.what());
    }
  }

  template <class T, class Parse>
  void read_enum(const std::string& key, T& out, Parse parse) {
    std::string name;
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_string()) fail(key, "expected a string");
    try {
      out = parse(v->get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }

  template <class T>
  void read_list(const std::string& key, std::vector<T>& out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_array()) fail(key, "expected an array");
    std::vector<T> tmp;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number_integer()) fail(key + "[" + std::to_string(i) + "]", "expected an integer");
      tmp.push_back(e.get<T>());
    }
    out = std::move(tmp);
  }

  Section child(const std::string& key) {
    static const json empty = json::object();
    const json* v = find(key);
    return Section(v ? *v : empty, field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(it.key(), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

void validate(const RunConfig& c) {
  try {
    presets::by_name(c.dataset);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  check(c.terminal_time > 0.0, "schedule.T", "must be > 0");
  check(c.sigma_family == "linear", "schedule.family", "only 'linear' (sigma(t) = t) is supported");
  check(!c.hidden.empty(), "network.hidden", "needs at least one layer");
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    check(c.hidden[i] > 0, "network.hidden[" + std::to_string(i) + "]", "must be > 0");
  }
  check(c.time_features % 2 == 0, "network.time_features", "must be even");
  check(c.k_features % 2 == 0, "network.k_features", "must be even");
  check(!c.sigma_data || *c.sigma_data > 0.0, "network.sigma_data", "must be > 0 or \"auto\"");
  check(c.teacher.iterations > 0, "teacher.iterations", "must be > 0");
  check(c.teacher.batch > 0, "teacher.batch", "must be > 0");
  check(c.teacher.lr > 0.0, "teacher.lr", "must be > 0");
  check(c.teacher.lr_final > 0.0 && c.teacher.lr_final <= c.teacher.lr, "teacher.lr_final",
        "must lie in (0, lr]");
  check(c.teacher.beta1 >= 0.0 && c.teacher.beta1 < 1.0, "teacher.beta1", "must lie in [0, 1)");
  check(c.teacher.clip_norm > 0.0, "teacher.clip_norm", "must be > 0");
  const auto& d = c.distill;
  check(d.iterations > 0, "distill.iterations", "must be > 0");
  check(!d.steps.empty(), "distill.steps", "must not be empty");
  check(!d.unify_steps.empty(), "distill.unify_steps", "must not be empty");
  for (int k : d.steps) check(k >= 1, "distill.steps", "step counts must be >= 1");
  for (int k : d.unify_steps) check(k >= 1, "distill.unify_steps", "step counts must be >= 1");
  check(d.instance_teacher_steps >= 1, "distill.instance_teacher_steps", "must be >= 1");
  check(d.instance_pool_size >= 1, "distill.instance_pool_size", "must be >= 1");
  check(d.beta1 >= 0.0 && d.beta1 < 1.0, "distill.beta1", "must lie in [0, 1)");
  check(d.beta2 >= 0.0 && d.beta2 < 1.0, "distill.beta2", "must lie in [0, 1)");
  check(d.clip_norm > 0.0, "distill.clip_norm", "must be > 0");
  check(d.weight_decay >= 0.0, "distill.weight_decay", "must be >= 0");
  check(c.eval.every > 0, "eval.every", "must be > 0");
  check(c.eval.n_samples >= 1000, "eval.n_samples", "must be >= 1000");
  check(c.eval.projections >= 1, "eval.projections", "must be >= 1");
  check(c.eval.log_every > 0, "eval.log_every", "must be > 0");
  try {
    c.distill_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["seed"] = c.seed;
  j["output_root"] = c.output_root;
  j["schedule"] = {{"T", c.terminal_time}, {"family", c.sigma_family}};
  j["network"] = {{"hidden", c.hidden},
                  {"time_features", c.time_features},
                  {"k_features", c.k_features},
                  {"sigma_data", c.sigma_data ? json(*c.sigma_data) : json("auto")}};
  const auto& t = c.teacher;
  j["teacher"] = {{"iterations", t.iterations}, {"batch", t.batch},         {"lr", t.lr},
                  {"lr_final", t.lr_final},     {"beta1", t.beta1},         {"clip_norm", t.clip_norm},
                  {"weighting", to_string(t.weighting)}, {"log_every", t.log_every}};
  const auto& d = c.distill;
  j["distill"] = {{"mode", to_string(d.mode)},
                  {"iterations", d.iterations},
                  {"batch", d.batch},
                  {"steps", d.steps},
                  {"unify_steps", d.unify_steps},
                  {"solver", to_string(d.solver)},
                  {"objective", to_string(d.objective)},
                  {"lambda_rule", to_string(d.lambda_rule)},
                  {"huber_c", d.huber_c ? json(*d.huber_c) : json(nullptr)},
                  {"omega_rule", to_string(d.omega_rule)},
                  {"importance_weights", d.importance_weights},
                  {"importance_clip", d.importance_clip},
                  {"fake_updates_per_iter", d.fake_updates_per_iter},
                  {"lr_generator", d.lr_generator},
                  {"lr_fake", d.lr_fake},
                  {"beta1", d.beta1},
                  {"beta2", d.beta2},
                  {"clip_norm", d.clip_norm},
                  {"weight_decay", d.weight_decay},
                  {"instance_teacher_steps", d.instance_teacher_steps},
                  {"instance_pool_size", d.instance_pool_size}};
  j["eval"] = {{"every", c.eval.every},
               {"n_samples", c.eval.n_samples},
               {"projections", c.eval.projections},
               {"log_every", c.eval.log_every}};
  return j;
}

}  // namespace

GaussianMixture RunConfig::mixture() const { return presets::by_name(dataset); }

NoiseSchedule RunConfig::schedule() const { return NoiseSchedule(terminal_time); }

NetConfig RunConfig::net_config() const {
  const GaussianMixture gmm = mixture();
  NetConfig n;
  n.data_dim = gmm.dim();
  n.hidden = hidden;
  n.time_features = time_features;
  n.k_features = k_features;
  n.sigma_data = sigma_data.value_or(
      std::sqrt(gmm.covariance().trace() / static_cast<double>(gmm.dim())));
  return n;
}

TeacherTrainConfig RunConfig::teacher_config() const {
  TeacherTrainConfig t;
  t.iterations = teacher.iterations;
  t.batch = teacher.batch;
  t.lr = teacher.lr;
  t.lr_final = teacher.lr_final;
  t.beta1 = teacher.beta1;
  t.clip_norm = teacher.clip_norm;
  t.seed = seed;
  t.log_every = teacher.log_every;
  t.weighting = teacher.weighting;
  return t;
}

DistillConfig RunConfig::distill_config() const {
  const auto& d = distill;
  DistillConfig c;
  c.steps_list = d.mode == DistillMode::tdm_unify ? d.unify_steps : d.steps;
  c.objective = d.objective;
  if (d.mode == DistillMode::tdm_l2) c.objective = GeneratorObjective::l2;
  if (d.mode == DistillMode::tdm_huber) c.objective = GeneratorObjective::huber;
  c.target = d.mode == DistillMode::clean_matching ? MatchTarget::clean : MatchTarget::trajectory;
  c.lambda_rule = d.lambda_rule;
  c.huber_c = d.huber_c;
  c.omega_rule = d.omega_rule;
  c.importance_clip = d.importance_clip;
  c.importance_weights = d.importance_weights;
  c.fake_updates_per_iter = d.fake_updates_per_iter;
  c.lr_generator = d.lr_generator;
  c.lr_fake = d.lr_fake;
  c.beta1 = d.beta1;
  c.beta2 = d.beta2;
  c.clip_norm = d.clip_norm;
  c.weight_decay = d.weight_decay;
  c.batch = d.batch;
  c.solver = d.solver;
  c.seed = seed;
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    // drop the library's "[json.exception.parse_error.101] parse error at line x, column y: " prefix
    const auto colon = msg.find(": ", msg.find("column"));
    if (colon != std::string::npos) msg = msg.substr(colon + 2);
    throw ConfigError(source + ":" + line_col(text, e.byte) + ": " + msg);
  }

  RunConfig c;
  try {
    Section root(j, "");
    root.read("dataset", c.dataset);
    root.read("seed", c.seed);
    root.read("output_root", c.output_root);

    Section sched = root.child("schedule");
    sched.read("T", c.terminal_time);
    sched.read("family", c.sigma_family);
    sched.finish();

    Section net = root.child("network");
    std::vector<long long> hidden;
    for (auto h : c.hidden) hidden.push_back(static_cast<long long>(h));
    net.read_list("hidden", hidden);
    c.hidden.clear();
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      if (hidden[i] <= 0) net.fail("hidden[" + std::to_string(i) + "]", "must be > 0");
      c.hidden.push_back(static_cast<std::size_t>(hidden[i]));
    }
    net.read("time_features", c.time_features);
    net.read("k_features", c.k_features);
    if (const json* sd = net.find("sigma_data")) {
      if (sd->is_string() && sd->get<std::string>() == "auto") {
        c.sigma_data.reset();
      } else if (sd->is_number()) {
        c.sigma_data = sd->get<double>();
      } else {
        net.fail("sigma_data", "expected a number or \"auto\"");
      }
    }
    net.finish();

    Section t = root.child("teacher");
    t.read("iterations", c.teacher.iterations);
    t.read("batch", c.teacher.batch);
    t.read("lr", c.teacher.lr);
    t.read("lr_final", c.teacher.lr_final);
    t.read("beta1", c.teacher.beta1);
    t.read("clip_norm", c.teacher.clip_norm);
    t.read_enum("weighting", c.teacher.weighting, weighting_from_string);
    t.read("log_every", c.teacher.log_every);
    t.finish();

    Section d = root.child("distill");
    auto& ds = c.distill;
    d.read_enum("mode", ds.mode, distill_mode_from_string);
    d.read("iterations", ds.iterations);
    d.read("batch", ds.batch);
    d.read_list("steps", ds.steps);
    d.read_list("unify_steps", ds.unify_steps);
    d.read_enum("solver", ds.solver, solver_from_string);
    d.read_enum("objective", ds.objective, objective_from_string);
    d.read_enum("lambda_rule", ds.lambda_rule, lambda_rule_from_string);
    if (const json* hc = d.find("huber_c")) {
      if (hc->is_null()) {
        ds.huber_c.reset();
      } else if (hc->is_number()) {
        ds.huber_c = hc->get<double>();
      } else {
        d.fail("huber_c", "expected a number or null");
      }
    }
    d.read_enum("omega_rule", ds.omega_rule, weighting_from_string);
    d.read("importance_weights", ds.importance_weights);
    d.read("importance_clip", ds.importance_clip);
    d.read("fake_updates_per_iter", ds.fake_updates_per_iter);
    d.read("lr_generator", ds.lr_generator);
    d.read("lr_fake", ds.lr_fake);
    d.read("beta1", ds.beta1);
    d.read("beta2", ds.beta2);
    d.read("clip_norm", ds.clip_norm);
    d.read("weight_decay", ds.weight_decay);
    d.read("instance_teacher_steps", ds.instance_teacher_steps);
    d.read("instance_pool_size", ds.instance_pool_size);
    d.finish();

    Section e = root.child("eval");
    e.read("every", c.eval.every);
    e.read("n_samples", c.eval.n_samples);
    e.read("projections", c.eval.projections);
    e.read("log_every", c.eval.log_every);
    e.finish();

    root.finish();
  } catch (const ConfigError& err) {
    throw ConfigError(source + ": " + err.what());
  }
  try {
    validate(c);
  } catch (const ConfigError& err) {
    throw ConfigError(source + ": " + err.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string canonical_json(const RunConfig& config) { return to_json(config).dump(); }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_digest(const RunConfig& config) { return fnv1a_hex(canonical_json(config)); }

}  // namespace tdm
