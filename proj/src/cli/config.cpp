// SPDX-License-Identifier: Apache-2.0
#include "sm2/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "sm2/errors.hpp"
#include "sm2/ledger.hpp"
#include "sm2/report.hpp"
#include "sm2/rng.hpp"

namespace sm2 {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kReference = "reference setup";
constexpr const char* kDefault = "artifact default";
constexpr const char* kFile = "from file";

// Defaults that reproduce the published experimental setup.
const std::set<std::string> kReferenceKeys = {
    "batch_candidates",
    "lr_grid.lr_min",
    "lr_grid.lr_max",
    "lr_grid.count",
    "objective.alpha",
    "objective.beta",
    "budget.exploratory_epochs_per_round",
    "budget.exploration_fraction",
    "budget.thorough_epochs_per_round",
    "budget.final_thorough_epochs",
};

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

// Reads one JSON object, tracking which keys were consumed.
class Section {
 public:
  Section(const json* obj, std::string path, RunConfig& cfg) : obj_(obj), path_(std::move(path)), cfg_(cfg) {
    if (obj_ && !obj_->is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_ && obj_->contains(key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) {
      origin(key, false);
      return nullptr;
    }
    origin(key, true);
    return &obj_->at(key);
  }

  void get(const std::string& key, double& dst) {
    if (const json* j = raw(key)) {
      if (!j->is_number()) throw ConfigError(join(path_, key), "expected a number");
      dst = j->get<double>();
    }
  }
  void get(const std::string& key, bool& dst) {
    if (const json* j = raw(key)) {
      if (!j->is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
      dst = j->get<bool>();
    }
  }
  void get(const std::string& key, std::string& dst) {
    if (const json* j = raw(key)) {
      if (!j->is_string()) throw ConfigError(join(path_, key), "expected a string");
      dst = j->get<std::string>();
    }
  }
  template <typename U>
    requires std::is_unsigned_v<U>
  void get(const std::string& key, U& dst) {
    if (const json* j = raw(key)) dst = unsigned_value<U>(*j, join(path_, key));
  }
  template <typename U>
  void get(const std::string& key, std::optional<U>& dst) {
    if (const json* j = raw(key)) {
      if (j->is_null()) {
        dst.reset();
        return;
      }
      dst = unsigned_value<U>(*j, join(path_, key));
    }
  }
  void get(const std::string& key, std::vector<std::size_t>& dst) {
    if (const json* j = raw(key)) {
      if (!j->is_array()) throw ConfigError(join(path_, key), "expected a list of integers");
      dst.clear();
      for (std::size_t i = 0; i < j->size(); ++i)
        dst.push_back(unsigned_value<std::size_t>((*j)[i], join(path_, key) + "[" + std::to_string(i) + "]"));
    }
  }
  void get(const std::string& key, std::vector<std::string>& dst) {
    if (const json* j = raw(key)) {
      if (!j->is_array()) throw ConfigError(join(path_, key), "expected a list of strings");
      dst.clear();
      for (const auto& v : *j) {
        if (!v.is_string()) throw ConfigError(join(path_, key), "expected a list of strings");
        dst.push_back(v.get<std::string>());
      }
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return has(key) ? &obj_->at(key) : nullptr;
  }

  // Every key present must have been read.
  void finish() const {
    if (!obj_) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
  }

  const std::string& path() const { return path_; }

 private:
  template <typename U>
  static U unsigned_value(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return static_cast<U>(j.get<std::uint64_t>());
    if (j.is_number_integer()) {
      if (j.get<std::int64_t>() < 0) throw ConfigError(path, "must be >= 0");
      return static_cast<U>(j.get<std::int64_t>());
    }
    if (j.is_number_float()) {
      const double d = j.get<double>();
      if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<U>(d);
    }
    throw ConfigError(path, "expected a non-negative integer");
  }

  void origin(const std::string& key, bool from_file) {
    const std::string full = join(path_, key);
    cfg_.origins[full] = from_file ? kFile : (kReferenceKeys.count(full) ? kReference : kDefault);
  }

  const json* obj_;
  std::string path_;
  RunConfig& cfg_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto parse_enum(const std::string& path, Fn fn, const std::string& value) {
  try {
    return fn(value);
  } catch (const ArgumentError& e) {
    throw ConfigError(path, e.what());
  }
}

void read_energy(Section& s, RunConfig& cfg) {
  auto& e = cfg.energy;
  s.get("p_idle", e.p_idle);
  s.get("p_max", e.p_max);
  s.get("gamma", e.gamma);
  s.get("b_sat", e.b_sat);
  s.get("s_max", e.s_max);
  s.get("kappa", e.kappa);
  s.get("noise_rel", e.noise_rel);
  s.get("noise_seed", cfg.energy_noise_seed);
  s.get("poll_interval_s", cfg.poll_interval_s);
  s.finish();
}

std::string hex16(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return s;
}

LearnerKind default_learner(const RunConfig& cfg) {
  switch (cfg.data.kind) {
    case DataKind::TwoGaussians: return LearnerKind::LogisticClassifier;
    case DataKind::Csv:
      return cfg.data.csv.task == TaskKind::Classification ? LearnerKind::LogisticClassifier
                                                           : LearnerKind::LinearRegression;
    default: return LearnerKind::LinearRegression;
  }
}

}  // namespace

std::string_view to_string(DataKind k) noexcept {
  switch (k) {
    case DataKind::TwoGaussians: return "two_gaussians";
    case DataKind::LinearRegression: return "linear_regression";
    case DataKind::QuadraticBowl: return "quadratic_bowl";
    case DataKind::Csv: return "csv";
  }
  return "two_gaussians";
}

std::uint64_t RunConfig::data_seed() const { return data.seed ? *data.seed : mix64(run.seed ^ 0xda7aULL); }
std::uint64_t RunConfig::trainer_seed() const {
  return trainer.seed ? *trainer.seed : mix64(run.seed ^ 0x7a1eULL);
}
std::uint64_t RunConfig::noise_seed() const {
  return energy_noise_seed ? *energy_noise_seed : mix64(run.seed ^ 0x9015eULL);
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");

  RunConfig cfg;
  Section root(&doc, "", cfg);

  {
    Section s(root.child("run"), "run", cfg);
    auto& r = cfg.run;
    s.get("seed", r.seed);
    s.get("mode", r.mode);
    std::string out = r.out_dir.string();
    s.get("out_dir", out);
    r.out_dir = out;
    s.get("start_time", r.start_time);
    s.get("holdout_fraction", r.holdout_fraction);
    s.get("reshuffle_each_epoch", r.reshuffle_each_epoch);
    s.get("store_capacity", r.store_capacity);
    s.get("vanilla_batch_size", r.vanilla_batch_size);
    s.get("vanilla_lr", r.vanilla_lr);
    {
      Section st(s.child("stop"), "run.stop", cfg);
      st.get("plateau", r.stop.plateau);
      st.get("plateau_patience", r.stop.plateau_patience);
      st.get("plateau_min_delta", r.stop.plateau_min_delta);
      st.finish();
    }
    s.finish();
  }
  {
    Section s(root.child("budget"), "budget", cfg);
    auto& b = cfg.budget;
    s.get("max_rounds", b.max_rounds);
    s.get("exploratory_epochs_per_round", b.exploratory_epochs_per_round);
    s.get("thorough_epochs_per_round", b.thorough_epochs_per_round);
    s.get("final_thorough_epochs", b.final_thorough_epochs);
    s.get("exploration_fraction", b.exploration_fraction);
    s.get("total_epoch_cap", b.total_epoch_cap);
    s.finish();
  }
  {
    Section s(root.child("objective"), "objective", cfg);
    s.get("alpha", cfg.objective.alpha);
    s.get("beta", cfg.objective.beta);
    s.finish();
  }
  {
    Section s(root.child("energy"), "energy", cfg);
    read_energy(s, cfg);
  }
  {
    Section s(root.child("lr_grid"), "lr_grid", cfg);
    s.get("lr_min", cfg.lr_grid.lr_min);
    s.get("lr_max", cfg.lr_grid.lr_max);
    s.get("count", cfg.lr_grid.count);
    std::string spacing(to_string(cfg.lr_grid.spacing));
    s.get("spacing", spacing);
    cfg.lr_grid.spacing = parse_enum("lr_grid.spacing", grid_spacing_from_string, spacing);
    s.get("window", cfg.explorer.window);
    std::string axis(to_string(cfg.explorer.axis));
    s.get("curvature_axis", axis);
    cfg.explorer.axis = parse_enum("lr_grid.curvature_axis", curvature_axis_from_string, axis);
    std::string iso(to_string(cfg.explorer.isolation));
    s.get("isolation", iso);
    cfg.explorer.isolation = parse_enum("lr_grid.isolation", isolation_from_string, iso);
    s.get("divergence_factor", cfg.explorer.divergence_factor);
    s.finish();
  }
  {
    Section s(root.child("data"), "data", cfg);
    auto& d = cfg.data;
    std::string kind(to_string(d.kind));
    s.get("kind", kind);
    if (kind == "two_gaussians") d.kind = DataKind::TwoGaussians;
    else if (kind == "linear_regression") d.kind = DataKind::LinearRegression;
    else if (kind == "quadratic_bowl") d.kind = DataKind::QuadraticBowl;
    else if (kind == "csv") d.kind = DataKind::Csv;
    else throw ConfigError("data.kind", "unknown data kind '" + kind + "'");
    s.get("seed", d.seed);
    switch (d.kind) {
      case DataKind::TwoGaussians:
        s.get("n", d.two_gaussians.n);
        s.get("dim", d.two_gaussians.dim);
        s.get("separation", d.two_gaussians.separation);
        break;
      case DataKind::LinearRegression:
        s.get("n", d.linear_regression.n);
        s.get("dim", d.linear_regression.dim);
        s.get("noise_sigma", d.linear_regression.noise_sigma);
        break;
      case DataKind::QuadraticBowl:
        s.get("n", d.quadratic_bowl.n);
        s.get("dim", d.quadratic_bowl.dim);
        s.get("condition_number", d.quadratic_bowl.condition_number);
        s.get("lambda_max", d.quadratic_bowl.lambda_max);
        break;
      case DataKind::Csv: {
        std::string path;
        s.get("path", path);
        if (path.empty()) throw ConfigError("data.path", "a CSV data section needs a path");
        d.csv_path = fs::path(path).is_absolute() || base_dir.empty() ? fs::path(path) : base_dir / path;
        s.get("target_columns", d.csv.target_columns);
        std::string task = "regression";
        s.get("task", task);
        if (task == "regression") d.csv.task = TaskKind::Regression;
        else if (task == "classification") d.csv.task = TaskKind::Classification;
        else throw ConfigError("data.task", "expected regression or classification");
        std::string delim(1, d.csv.delimiter);
        s.get("delimiter", delim);
        if (delim.size() != 1) throw ConfigError("data.delimiter", "must be a single character");
        d.csv.delimiter = delim[0];
        break;
      }
    }
    s.finish();
  }
  {
    Section s(root.child("trainer"), "trainer", cfg);
    auto& t = cfg.trainer;
    if (s.has("kind")) {
      std::string kind;
      s.get("kind", kind);
      t.kind = parse_enum("trainer.kind", learner_kind_from_string, kind);
    } else {
      s.raw("kind");
    }
    s.get("hidden_dims", t.hidden_dims);
    s.get("init_scale", t.init_scale);
    s.get("seed", t.seed);
    s.finish();
  }
  root.get("batch_candidates", cfg.batch_candidates);
  root.finish();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ConfigError("", "config file " + path.string() + " is empty");
  return parse_config(text, path.parent_path());
}

void apply_power_model_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read power model file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--power-model", std::string("not valid JSON: ") + e.what());
  }
  // Keys already set by the main file stay "from file"; the section reader
  // would reset untouched keys to their default origin, so keep a copy.
  const auto origins = cfg.origins;
  Section s(&doc, "energy", cfg);
  read_energy(s, cfg);
  for (const auto& [k, v] : origins)
    if (v == kFile) cfg.origins[k] = v;
}

void validate_config(const RunConfig& cfg) {
  const auto& r = cfg.run;
  if (r.mode != "sm2" && r.mode != "vanilla") throw ConfigError("run.mode", "expected sm2 or vanilla");
  try {
    iso_timestamp(r.start_time, 0.0);
  } catch (const ArgumentError& e) {
    throw ConfigError("run.start_time", e.what());
  }
  if (!(r.holdout_fraction > 0.0 && r.holdout_fraction < 1.0))
    throw ConfigError("run.holdout_fraction", "must be within (0, 1)");
  r.stop.validate();
  cfg.budget.validate();
  cfg.objective.validate();
  cfg.energy.validate();
  if (!(cfg.poll_interval_s > 0.0) || !std::isfinite(cfg.poll_interval_s))
    throw ConfigError("energy.poll_interval_s", "must be > 0");
  cfg.lr_grid.validate();
  cfg.explorer.validate(cfg.lr_grid);

  const auto& c = cfg.batch_candidates;
  if (c.empty()) throw ConfigError("batch_candidates", "at least one candidate is required");
  const std::size_t micro = *std::min_element(c.begin(), c.end());
  if (micro == 0) throw ConfigError("batch_candidates", "batch sizes must be >= 1");
  for (std::size_t b : c)
    if (b % micro != 0)
      throw ConfigError("batch_candidates", std::to_string(b) + " is not a multiple of the smallest candidate " +
                                                std::to_string(micro) +
                                                " (larger batches are concatenations of the smallest)");
  if (std::set<std::size_t>(c.begin(), c.end()).size() != c.size())
    throw ConfigError("batch_candidates", "duplicate batch size");
  if (r.mode == "vanilla") {
    if (std::find(c.begin(), c.end(), r.vanilla_batch_size) == c.end())
      throw ConfigError("run.vanilla_batch_size", "must be one of batch_candidates");
    if (!(r.vanilla_lr > 0.0) || !std::isfinite(r.vanilla_lr))
      throw ConfigError("run.vanilla_lr", "must be > 0");
  }

  const auto& d = cfg.data;
  const auto positive = [](std::size_t v, const char* path) {
    if (v == 0) throw ConfigError(path, "must be >= 1");
  };
  switch (d.kind) {
    case DataKind::TwoGaussians:
      positive(d.two_gaussians.n, "data.n");
      positive(d.two_gaussians.dim, "data.dim");
      if (!(d.two_gaussians.separation >= 0.0)) throw ConfigError("data.separation", "must be >= 0");
      break;
    case DataKind::LinearRegression:
      positive(d.linear_regression.n, "data.n");
      positive(d.linear_regression.dim, "data.dim");
      if (!(d.linear_regression.noise_sigma >= 0.0)) throw ConfigError("data.noise_sigma", "must be >= 0");
      break;
    case DataKind::QuadraticBowl:
      positive(d.quadratic_bowl.n, "data.n");
      positive(d.quadratic_bowl.dim, "data.dim");
      if (!(d.quadratic_bowl.condition_number >= 1.0))
        throw ConfigError("data.condition_number", "must be >= 1");
      if (!(d.quadratic_bowl.lambda_max > 0.0)) throw ConfigError("data.lambda_max", "must be > 0");
      break;
    case DataKind::Csv:
      if (!fs::is_regular_file(d.csv_path))
        throw ConfigError("data.path", "data file not found: " + d.csv_path.string());
      if (d.csv.target_columns.empty())
        throw ConfigError("data.target_columns", "at least one target column is required");
      break;
  }

  const auto& t = cfg.trainer;
  const LearnerKind kind = t.kind.value_or(default_learner(cfg));
  if (kind == LearnerKind::TinyMLP) {
    if (t.hidden_dims.empty()) throw ConfigError("trainer.hidden_dims", "needs at least one layer");
    for (auto h : t.hidden_dims)
      if (h == 0) throw ConfigError("trainer.hidden_dims", "layer widths must be >= 1");
  }
  if (!(t.init_scale > 0.0) || !std::isfinite(t.init_scale))
    throw ConfigError("trainer.init_scale", "must be a finite value > 0");
  const bool classification = d.kind == DataKind::TwoGaussians ||
                              (d.kind == DataKind::Csv && d.csv.task == TaskKind::Classification);
  if (classification != (kind == LearnerKind::LogisticClassifier))
    throw ConfigError("trainer.kind", std::string(to_string(kind)) + " does not fit a " +
                                          (classification ? "classification" : "regression") + " task");
}

ordered_json effective_config_json(const RunConfig& cfg) {
  ordered_json j;
  const auto& r = cfg.run;
  j["run"] = {{"seed", r.seed},
              {"mode", r.mode},
              {"out_dir", r.out_dir.string()},
              {"start_time", r.start_time},
              {"holdout_fraction", r.holdout_fraction},
              {"reshuffle_each_epoch", r.reshuffle_each_epoch},
              {"store_capacity", r.store_capacity},
              {"vanilla_batch_size", r.vanilla_batch_size},
              {"vanilla_lr", r.vanilla_lr},
              {"stop",
               {{"plateau", r.stop.plateau},
                {"plateau_patience", r.stop.plateau_patience},
                {"plateau_min_delta", r.stop.plateau_min_delta}}}};
  const auto& b = cfg.budget;
  j["budget"] = {{"max_rounds", b.effective_max_rounds(cfg.batch_candidates.size())},
                 {"exploratory_epochs_per_round", b.exploratory_epochs_per_round},
                 {"thorough_epochs_per_round", b.thorough_epochs_per_round},
                 {"final_thorough_epochs", b.final_thorough_epochs},
                 {"exploration_fraction", b.exploration_fraction},
                 {"total_epoch_cap", b.total_epoch_cap}};
  j["objective"] = {{"alpha", cfg.objective.alpha}, {"beta", cfg.objective.beta}};
  const auto& e = cfg.energy;
  j["energy"] = {{"p_idle", e.p_idle},   {"p_max", e.p_max},         {"gamma", e.gamma},
                 {"b_sat", e.b_sat},     {"s_max", e.s_max},         {"kappa", e.kappa},
                 {"noise_rel", e.noise_rel}, {"noise_seed", cfg.noise_seed()},
                 {"poll_interval_s", cfg.poll_interval_s}};
  ordered_json grid = {{"lr_min", cfg.lr_grid.lr_min},
                       {"lr_max", cfg.lr_grid.lr_max},
                       {"count", cfg.lr_grid.count},
                       {"spacing", std::string(to_string(cfg.lr_grid.spacing))},
                       {"window", cfg.explorer.window},
                       {"curvature_axis", std::string(to_string(cfg.explorer.axis))},
                       {"isolation", std::string(to_string(cfg.explorer.isolation))},
                       {"divergence_factor", cfg.explorer.divergence_factor}};
  try {
    grid["points"] = cfg.lr_grid.points();
  } catch (const ConfigError&) {
  }
  j["lr_grid"] = grid;

  const auto& d = cfg.data;
  ordered_json data = {{"kind", std::string(to_string(d.kind))}, {"seed", cfg.data_seed()}};
  switch (d.kind) {
    case DataKind::TwoGaussians:
      data["n"] = d.two_gaussians.n;
      data["dim"] = d.two_gaussians.dim;
      data["separation"] = d.two_gaussians.separation;
      break;
    case DataKind::LinearRegression:
      data["n"] = d.linear_regression.n;
      data["dim"] = d.linear_regression.dim;
      data["noise_sigma"] = d.linear_regression.noise_sigma;
      break;
    case DataKind::QuadraticBowl:
      data["n"] = d.quadratic_bowl.n;
      data["dim"] = d.quadratic_bowl.dim;
      data["condition_number"] = d.quadratic_bowl.condition_number;
      data["lambda_max"] = d.quadratic_bowl.lambda_max;
      break;
    case DataKind::Csv:
      data["path"] = d.csv_path.string();
      data["target_columns"] = d.csv.target_columns;
      data["task"] = d.csv.task == TaskKind::Classification ? "classification" : "regression";
      data["delimiter"] = std::string(1, d.csv.delimiter);
      break;
  }
  j["data"] = data;
  const LearnerKind kind = cfg.trainer.kind.value_or(default_learner(cfg));
  ordered_json trainer = {{"kind", std::string(to_string(kind))}};
  if (kind == LearnerKind::TinyMLP) trainer["hidden_dims"] = cfg.trainer.hidden_dims;
  trainer["init_scale"] = cfg.trainer.init_scale;
  trainer["seed"] = cfg.trainer_seed();
  j["trainer"] = trainer;
  j["batch_candidates"] = cfg.batch_candidates;
  return j;
}

std::string effective_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  const auto emit = [&](const auto& self, const ordered_json& node, const std::string& path) -> void {
    if (node.is_object()) {
      for (auto it = node.begin(); it != node.end(); ++it) self(self, it.value(), join(path, it.key()));
      return;
    }
    std::string origin;
    if (auto it = cfg.origins.find(path); it != cfg.origins.end()) origin = it->second;
    else if (path == "lr_grid.points") origin = "derived";
    else origin = kReferenceKeys.count(path) ? kReference : kDefault;
    if (origin != kFile && (path == "data.seed" || path == "trainer.seed" || path == "energy.noise_seed"))
      origin = "derived from run.seed";
    os << path << " = " << node.dump() << "  (" << origin << ")\n";
  };
  emit(emit, effective_config_json(cfg), "");
  return os.str();
}

Dataset build_dataset(const RunConfig& cfg) {
  const auto& d = cfg.data;
  const double h = cfg.run.holdout_fraction;
  switch (d.kind) {
    case DataKind::TwoGaussians: return generate_synthetic(d.two_gaussians, cfg.data_seed(), h);
    case DataKind::LinearRegression: return generate_synthetic(d.linear_regression, cfg.data_seed(), h);
    case DataKind::QuadraticBowl: return generate_synthetic(d.quadratic_bowl, cfg.data_seed(), h);
    case DataKind::Csv: return load_csv(d.csv_path, d.csv, cfg.data_seed(), h);
  }
  throw ConfigError("data.kind", "unknown data kind");
}

BuiltinLearnerSpec learner_spec(const RunConfig& cfg, const Dataset& data) {
  BuiltinLearnerSpec spec;
  spec.kind = cfg.trainer.kind.value_or(default_learner(cfg));
  spec.input_dim = data.input_dim();
  spec.output_dim = data.output_dim();
  spec.hidden_dims = cfg.trainer.hidden_dims;
  spec.init_scale = cfg.trainer.init_scale;
  spec.seed = cfg.trainer_seed();
  spec.validate();
  return spec;
}

SchedulerOptions scheduler_options(const RunConfig& cfg, const std::string& fingerprint) {
  SchedulerOptions o;
  o.budget = cfg.budget;
  o.weights = cfg.objective;
  o.grid = cfg.lr_grid;
  o.explorer = cfg.explorer;
  o.stop = cfg.run.stop;
  o.reshuffle_each_epoch = cfg.run.reshuffle_each_epoch;
  o.seed = cfg.run.seed;
  o.fingerprint = fingerprint;
  o.start_time = cfg.run.start_time;
  return o;
}

SimPowerModel power_model(const RunConfig& cfg) {
  SimPowerModel m = cfg.energy;
  m.noise_seed = cfg.noise_seed();
  return m;
}

std::string experiment_fingerprint(const RunConfig& cfg) {
  const auto eff = effective_config_json(cfg);
  ordered_json key = {{"data", eff["data"]},
                      {"trainer", eff["trainer"]},
                      {"seed", cfg.run.seed},
                      {"holdout_fraction", cfg.run.holdout_fraction}};
  if (cfg.data.kind == DataKind::Csv) {
    key["data"].erase("path");
    std::ifstream in(cfg.data.csv_path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    key["data"]["content"] = hex16(fnv1a(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
  }
  const std::string s = key.dump();
  return hex16(fnv1a(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

}  // namespace sm2
