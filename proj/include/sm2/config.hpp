// SPDX-License-Identifier: Apache-2.0
#pragma once
// Run configuration file: parsing, defaults, validation and the objects a
// run is assembled from.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sm2/dataio.hpp"
#include "sm2/energy.hpp"
#include "sm2/lr_explorer.hpp"
#include "sm2/scheduler.hpp"
#include "sm2/trainer.hpp"
#include "sm2/types.hpp"

namespace sm2 {

enum class DataKind : std::uint8_t { TwoGaussians, LinearRegression, QuadraticBowl, Csv };

std::string_view to_string(DataKind k) noexcept;

struct DataSection {
  DataKind kind = DataKind::TwoGaussians;
  std::optional<std::uint64_t> seed;  // derived from run.seed when unset
  TwoGaussiansSpec two_gaussians{100000, 8, 3.0};
  LinearRegressionSpec linear_regression{100000, 8, 0.1};
  QuadraticBowlSpec quadratic_bowl{100000, 4, 10.0, 20.0};
  std::filesystem::path csv_path;  // resolved against the config file's directory
  CsvSchema csv;
};

struct TrainerSection {
  std::optional<LearnerKind> kind;  // defaults by task
  std::vector<std::size_t> hidden_dims{16};
  double init_scale = 0.1;
  std::optional<std::uint64_t> seed;
};

struct RunSection {
  std::uint64_t seed = 0;
  std::string mode = "sm2";  // or "vanilla"
  std::filesystem::path out_dir = "sm2_out";  // --out takes precedence
  std::string start_time = "1970-01-01T00:00:00Z";
  double holdout_fraction = 0.1;
  bool reshuffle_each_epoch = false;
  std::size_t store_capacity = 0;
  std::size_t vanilla_batch_size = 64;
  double vanilla_lr = 0.01;
  StopSettings stop;
};

struct RunConfig {
  RunSection run;
  RunBudget budget;
  ObjectiveWeights objective;
  SimPowerModel energy;
  std::optional<std::uint64_t> energy_noise_seed;
  double poll_interval_s = 0.1;
  LrGrid lr_grid;
  ExplorerOptions explorer;
  TrainerSection trainer;
  DataSection data;
  std::vector<std::size_t> batch_candidates{8, 16, 32, 64, 128, 256, 512, 1024};

  // Dotted key -> "reference setup", "artifact default" or "from file".
  std::map<std::string, std::string> origins;

  std::uint64_t data_seed() const;
  std::uint64_t trainer_seed() const;
  std::uint64_t noise_seed() const;
};

// Parses a JSON document (comments allowed). Unknown keys and wrong types
// raise ConfigError naming the key. `base_dir` resolves relative data paths.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Overrides energy-model fields from a standalone JSON object with the keys
// of the "energy" section.
void apply_power_model_file(RunConfig& cfg, const std::filesystem::path& path);

// Cross-field checks (bounds, divisibility, data file presence).
void validate_config(const RunConfig& cfg);

// Fully-defaulted configuration.
nlohmann::ordered_json effective_config_json(const RunConfig& cfg);
// One "key = value  (origin)" line per leaf, in document order.
std::string effective_config_text(const RunConfig& cfg);

Dataset build_dataset(const RunConfig& cfg);
BuiltinLearnerSpec learner_spec(const RunConfig& cfg, const Dataset& data);
SchedulerOptions scheduler_options(const RunConfig& cfg, const std::string& fingerprint);
SimPowerModel power_model(const RunConfig& cfg);

// FNV-1a digest over the data section (plus CSV contents), resolved trainer
// settings, seed and hold-out fraction.
std::string experiment_fingerprint(const RunConfig& cfg);

}  // namespace sm2
