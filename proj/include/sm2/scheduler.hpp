// SPDX-License-Identifier: Apache-2.0
#pragma once
// The outer loop: exploratory and thorough modes per round, snapshot
// isolation, halving, the extended final phase and stop conditions.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sm2/dataio.hpp"
#include "sm2/energy.hpp"
#include "sm2/ledger.hpp"
#include "sm2/lr_explorer.hpp"
#include "sm2/trainer.hpp"
#include "sm2/types.hpp"

namespace sm2 {

struct StopSettings {
  bool plateau = true;
  std::uint32_t plateau_patience = 2;
  double plateau_min_delta = 1e-4;

  void validate() const;
};

struct SchedulerOptions {
  RunBudget budget;
  ObjectiveWeights weights;
  LrGrid grid;
  ExplorerOptions explorer;
  StopSettings stop;
  bool reshuffle_each_epoch = false;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::string start_time = "1970-01-01T00:00:00Z";

  void validate() const;
};

// Builds a fresh trainer for a configuration. Must be deterministic: two
// calls with the same configuration yield identical initial state.
using TrainerFactory = std::function<std::unique_ptr<Trainer>(const HyperConfig&)>;

struct RoundSummary {
  std::uint32_t round = 0;
  std::vector<ConfigId> live_at_start;
  std::vector<ConfigId> dropped;
  std::optional<ConfigId> final_config;  // set once a single config remains
  // Latest thorough performance of the final config, oriented so higher is better.
  std::optional<double> final_performance;
  std::uint32_t max_epochs = 0;  // largest per-config epoch count after the round
  double energy_wh = 0.0;
};

struct StopPolicy {
  std::uint32_t max_rounds = 1;
  std::uint32_t epoch_cap = 100;
  StopSettings settings;
};

// True once max_rounds rounds ran, a configuration reached the epoch cap, or
// (plateau armed) the final config's performance failed to beat its best by
// more than min_delta for `patience` consecutive rounds. The first round with
// a final config only sets the baseline.
bool should_stop(std::span<const RoundSummary> history, const StopPolicy& policy);

struct RunResult {
  ConfigId final_config;
  std::size_t final_batch_size = 0;
  double final_lr = 0.0;
  TrainerSnapshot final_snapshot;
  double final_performance = 0.0;
  Polarity polarity = Polarity::HigherIsBetter;
  double total_energy_wh = 0.0;
  bool truncated = false;
  std::vector<RoundSummary> rounds;
};

struct ExploratoryOutcome {
  EpochEnergyRecord energy;
  EpochMetricsRecord metrics;
  StableLrSelection selection;
};

struct ThoroughOutcome {
  EpochEnergyRecord energy;
  EpochMetricsRecord metrics;
};

// Owns the run state; the dataset, store, monitor and ledger are borrowed
// and must outlive the scheduler. The store must be built on `data`.
class Sm2Scheduler {
 public:
  Sm2Scheduler(SchedulerOptions opts, const Dataset& data, MicroBatchStore& store,
               PowerMonitor& monitor, RunLedger& ledger, TrainerFactory factory);

  // One configuration per store candidate, ids in candidate order, all
  // starting at lr_min. Throws ConfigError before any work when the
  // exploration partition is too small, RunAborted when every live
  // configuration diverges in a round or the final config diverges.
  RunResult run();

  // Baseline: one configuration at a fixed batch size and LR, thorough
  // epochs only, following the epoch schedule the final config of a full run
  // over `n_candidates` configurations would see.
  RunResult run_vanilla(std::size_t batch_size, double lr, std::size_t n_candidates);

  // One isolated exploratory epoch: explores on the partition, evaluates the
  // selected branch on the hold-out split, restores the trainer and sets the
  // config's current LR. Does not touch the ledger.
  ExploratoryOutcome run_exploratory(HyperConfig& config, Trainer& trainer, std::uint32_t round,
                                     std::uint32_t epoch_index);

  // One full-data epoch at the config's current LR. On divergence the trainer
  // is restored to its state before the epoch and the metrics are flagged;
  // the energy already spent is still reported.
  ThoroughOutcome run_thorough(const HyperConfig& config, Trainer& trainer, std::uint32_t round,
                               std::uint32_t epoch_index);

  double sim_time_s() const noexcept { return clock_s_; }

 private:
  std::vector<std::size_t> epoch_order(std::uint32_t epoch_index) const;

  SchedulerOptions opts_;
  const Dataset* data_;
  MicroBatchStore* store_;
  PowerMonitor* monitor_;
  RunLedger* ledger_;
  TrainerFactory factory_;
  Batch holdout_;
  std::vector<double> grid_;
  std::vector<std::size_t> partition_;
  double clock_s_ = 0.0;
};

// Micro-batch order of a thorough epoch; identical to what the scheduler uses.
std::vector<std::size_t> thorough_order(const MicroBatchStore& store, bool reshuffle,
                                        std::uint64_t seed, std::uint32_t epoch_index);

// Retrains the final configuration of `ledger` from a fresh trainer using
// only its thorough epochs and their recorded learning rates.
TrainerSnapshot replay_thorough(const RunLedger& ledger, MicroBatchStore& store,
                                const TrainerFactory& factory, bool reshuffle_each_epoch,
                                std::uint64_t seed);

}  // namespace sm2
