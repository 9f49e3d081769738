// SPDX-License-Identifier: Apache-2.0
#pragma once
// Domain types shared by every module: configurations, per-epoch records,
// halving decisions and the budget that bounds a run.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sm2 {

struct ConfigId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(ConfigId, ConfigId) = default;
};

enum class ConfigStatus : std::uint8_t { Active, Dropped, Final };
enum class Mode : std::uint8_t { Exploratory, Thorough };
enum class Polarity : std::uint8_t { HigherIsBetter, LowerIsBetter };

std::string_view to_string(ConfigStatus s) noexcept;
std::string_view to_string(Mode m) noexcept;
std::string_view to_string(Polarity p) noexcept;
Mode mode_from_string(std::string_view s);
Polarity polarity_from_string(std::string_view s);

// One candidate configuration. Status only ever moves Active->Dropped or
// Active->Final; the mutators enforce that.
class HyperConfig {
 public:
  HyperConfig(ConfigId id, std::size_t batch_size, double initial_lr);

  ConfigId id() const noexcept { return id_; }
  std::size_t batch_size() const noexcept { return batch_size_; }
  double current_lr() const noexcept { return current_lr_; }
  ConfigStatus status() const noexcept { return status_; }
  std::optional<std::uint32_t> dropped_in_round() const noexcept { return dropped_in_round_; }
  bool live() const noexcept { return status_ != ConfigStatus::Dropped; }

  void set_lr(double lr, double lr_min, double lr_max);
  void drop(std::uint32_t round);
  void finalize();

 private:
  ConfigId id_;
  std::size_t batch_size_;
  double current_lr_;
  ConfigStatus status_ = ConfigStatus::Active;
  std::optional<std::uint32_t> dropped_in_round_;
};

struct RunBudget {
  std::optional<std::uint32_t> max_rounds;  // unset: ceil(log2 n) + 2
  std::uint32_t exploratory_epochs_per_round = 1;
  std::uint32_t thorough_epochs_per_round = 5;
  std::uint32_t final_thorough_epochs = 10;
  double exploration_fraction = 0.25;
  std::uint32_t total_epoch_cap = 100;

  void validate() const;
  std::uint32_t effective_max_rounds(std::size_t n_configs) const;
};

// Number of halving rounds needed to go from n configurations to one.
std::uint32_t halving_rounds(std::size_t n) noexcept;

struct ObjectiveWeights {
  double alpha = 0.75;
  double beta = 0.5;

  void validate() const;
};

// Raw per-configuration observations feeding the objective.
struct RawAttributes {
  ConfigId config_id;
  double performance = 0.0;
  Polarity polarity = Polarity::HigherIsBetter;
  double energy_wh = 0.0;
  double selected_lr = 0.0;
  bool diverged = false;
};

// Normalized attributes, each in [0, 1] with 1 the most desirable.
struct AttributeVector {
  ConfigId config_id;
  double performance = 1.0;
  double energy = 1.0;
  double learning_rate = 1.0;
};

struct EpochEnergyRecord {
  ConfigId config_id;
  std::uint32_t round = 0;
  std::uint32_t epoch_index = 0;
  Mode mode = Mode::Thorough;
  std::size_t batch_size = 0;
  std::vector<double> power_samples;
  double duration_s = 0.0;
  double energy_wh = 0.0;
  double sim_time_s = 0.0;  // simulated clock at the end of the epoch

  void validate() const;
};

struct LossPoint {
  double lr = 0.0;
  double mean_loss = 0.0;
};

// Present on exploratory metrics records only.
struct ExplorationTrace {
  std::vector<LossPoint> losses;
  std::vector<double> curvature;
  std::optional<std::size_t> window_begin;  // curvature index, inclusive
  std::optional<std::size_t> window_end;    // curvature index, exclusive
  bool fallback = false;
};

struct EpochMetricsRecord {
  ConfigId config_id;
  std::uint32_t round = 0;
  std::uint32_t epoch_index = 0;
  Mode mode = Mode::Thorough;
  double performance = 0.0;
  Polarity polarity = Polarity::HigherIsBetter;
  double selected_lr = 0.0;  // LR chosen this epoch, or the LR trained at in thorough mode
  bool diverged = false;
  std::optional<ExplorationTrace> exploration;
  double sim_time_s = 0.0;

  void validate() const;
};

struct HalvingEntry {
  RawAttributes raw;
  AttributeVector normalized;
  double score = 0.0;
  bool dropped = false;
};

struct HalvingDecision {
  std::uint32_t round = 0;
  ObjectiveWeights weights;
  std::vector<HalvingEntry> entries;
  std::vector<ConfigId> dropped;
  std::vector<std::string> tie_breaks;
  double sim_time_s = 0.0;
};

struct FinalSelection {
  ConfigId config_id;
  std::size_t batch_size = 0;
  double final_lr = 0.0;
  std::uint32_t total_epochs = 0;
  double total_energy_wh = 0.0;
  bool truncated = false;
  double sim_time_s = 0.0;
};

struct ConfigSummary {
  ConfigId id;
  std::size_t batch_size = 0;
  double initial_lr = 0.0;
};

// First event of every ledger. `fingerprint` identifies data, learner and
// seed so that ledgers of comparable experiments can be matched.
struct RunStart {
  std::string fingerprint;
  std::string mode;  // "sm2" or "vanilla"
  std::uint64_t seed = 0;
  ObjectiveWeights weights;
  double lr_min = 0.0;
  double lr_max = 0.0;
  std::vector<ConfigSummary> configs;
  std::string start_time;  // ISO-8601 origin of the simulated clock
  double sim_time_s = 0.0;
};

using LedgerEvent =
    std::variant<RunStart, EpochEnergyRecord, EpochMetricsRecord, HalvingDecision, FinalSelection>;

}  // namespace sm2
