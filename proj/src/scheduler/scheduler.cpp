// SPDX-License-Identifier: Apache-2.0
#include "sm2/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sm2/errors.hpp"
#include "sm2/objective.hpp"
#include "sm2/rng.hpp"

namespace sm2 {

namespace {

double oriented(double perf, Polarity p) { return p == Polarity::HigherIsBetter ? perf : -perf; }

// Best-scoring live config of a decision: score, then normalized E, then id.
ConfigId best_of(const HalvingDecision& dec, const std::vector<HyperConfig>& configs) {
  const HalvingEntry* best = nullptr;
  for (const auto& e : dec.entries) {
    if (!configs.at(e.raw.config_id.value).live()) continue;
    if (!best || e.score > best->score ||
        (e.score == best->score && e.normalized.energy > best->normalized.energy) ||
        (e.score == best->score && e.normalized.energy == best->normalized.energy &&
         e.raw.config_id < best->raw.config_id))
      best = &e;
  }
  if (!best) throw RunAborted("no live configuration left to select");
  return best->raw.config_id;
}

}  // namespace

void StopSettings::validate() const {
  if (plateau && plateau_patience == 0) throw ConfigError("run.stop.plateau_patience", "must be >= 1");
  if (!(plateau_min_delta >= 0.0) || !std::isfinite(plateau_min_delta))
    throw ConfigError("run.stop.plateau_min_delta", "must be a finite value >= 0");
}

void SchedulerOptions::validate() const {
  budget.validate();
  weights.validate();
  grid.validate();
  explorer.validate(grid);
  stop.validate();
}

bool should_stop(std::span<const RoundSummary> history, const StopPolicy& policy) {
  if (history.size() >= policy.max_rounds) return true;
  if (!history.empty() && history.back().max_epochs >= policy.epoch_cap) return true;
  if (!policy.settings.plateau) return false;

  std::optional<double> best;
  std::uint32_t stale = 0;
  for (const auto& r : history) {
    if (!r.final_performance) continue;
    const double p = *r.final_performance;
    if (!best) {
      best = p;
    } else if (p > *best + policy.settings.plateau_min_delta) {
      best = p;
      stale = 0;
    } else {
      best = std::max(*best, p);
      ++stale;
    }
  }
  return best && stale >= policy.settings.plateau_patience;
}

std::vector<std::size_t> thorough_order(const MicroBatchStore& store, bool reshuffle,
                                        std::uint64_t seed, std::uint32_t epoch_index) {
  if (!reshuffle) return store.all_micro();
  return store.shuffled(mix64(seed ^ mix64(0x5eedULL + epoch_index)));
}

Sm2Scheduler::Sm2Scheduler(SchedulerOptions opts, const Dataset& data, MicroBatchStore& store,
                           PowerMonitor& monitor, RunLedger& ledger, TrainerFactory factory)
    : opts_(std::move(opts)),
      data_(&data),
      store_(&store),
      monitor_(&monitor),
      ledger_(&ledger),
      factory_(std::move(factory)) {
  opts_.validate();
  if (!factory_) throw ArgumentError("a trainer factory is required");
  if (data.holdout.empty()) throw ConfigError("run.holdout_fraction", "hold-out split is empty");
  holdout_ = data.holdout_batch();
  grid_ = opts_.grid.points();
  partition_ = store.partition(opts_.budget.exploration_fraction);
}

std::vector<std::size_t> Sm2Scheduler::epoch_order(std::uint32_t epoch_index) const {
  return thorough_order(*store_, opts_.reshuffle_each_epoch, opts_.seed, epoch_index);
}

ExploratoryOutcome Sm2Scheduler::run_exploratory(HyperConfig& config, Trainer& trainer,
                                                 std::uint32_t round, std::uint32_t epoch_index) {
  const auto batches = collect_batches(*store_, config.batch_size(), partition_);
  monitor_->start_epoch(config.id(), round, epoch_index, Mode::Exploratory);
  const TrainerSnapshot before = trainer.snapshot();

  CyclicalResult res;
  try {
    res = cyclical_losses(trainer, batches, grid_, opts_.explorer,
                          [this](std::size_t n) { monitor_->on_batch(n); });
  } catch (...) {
    trainer.restore(before);
    try {
      monitor_->end_epoch();
    } catch (const MeasurementError&) {
    }
    throw;
  }
  ExploratoryOutcome out;
  out.selection = select_stable_lr(res.mean_loss, grid_, opts_.explorer.window, opts_.explorer.axis);
  const std::size_t branch =
      opts_.explorer.isolation == ExplorationIsolation::PerLr ? out.selection.selected_index : 0;
  trainer.restore(res.end_states.at(branch));
  const Evaluation eval = trainer.evaluate(holdout_);
  trainer.restore(before);

  out.energy = monitor_->end_epoch();
  clock_s_ += out.energy.duration_s;
  out.energy.sim_time_s = clock_s_;

  config.set_lr(out.selection.selected_lr, opts_.grid.lr_min, opts_.grid.lr_max);

  auto& m = out.metrics;
  m.config_id = config.id();
  m.round = round;
  m.epoch_index = epoch_index;
  m.mode = Mode::Exploratory;
  m.performance = eval.performance;
  m.polarity = eval.polarity;
  m.selected_lr = out.selection.selected_lr;
  m.diverged = out.selection.fallback || !std::isfinite(eval.performance);
  m.sim_time_s = clock_s_;
  ExplorationTrace trace;
  for (std::size_t i = 0; i < grid_.size(); ++i) trace.losses.push_back({grid_[i], res.mean_loss[i]});
  trace.curvature = out.selection.curvature;
  trace.window_begin = out.selection.window_begin;
  trace.window_end = out.selection.window_end;
  trace.fallback = out.selection.fallback;
  m.exploration = std::move(trace);
  return out;
}

ThoroughOutcome Sm2Scheduler::run_thorough(const HyperConfig& config, Trainer& trainer,
                                           std::uint32_t round, std::uint32_t epoch_index) {
  const TrainerSnapshot before = trainer.snapshot();
  const double lr = config.current_lr();
  monitor_->start_epoch(config.id(), round, epoch_index, Mode::Thorough);
  BatchStream stream(*store_, config.batch_size(), epoch_order(epoch_index));
  bool diverged = false;
  try {
    while (auto batch = stream.next()) {
      monitor_->on_batch(batch->size());
      trainer.train_batches(std::span<const Batch>(&*batch, 1), std::span<const double>(&lr, 1));
    }
  } catch (const DivergenceError&) {
    // The time spent up to the blow-up is still charged.
    trainer.restore(before);
    diverged = true;
  }
  Evaluation eval{std::numeric_limits<double>::quiet_NaN(), Polarity::HigherIsBetter};
  if (!diverged) eval = trainer.evaluate(holdout_);
  else eval.polarity = trainer.evaluate(holdout_).polarity;

  ThoroughOutcome out;
  out.energy = monitor_->end_epoch();
  clock_s_ += out.energy.duration_s;
  out.energy.sim_time_s = clock_s_;
  auto& m = out.metrics;
  m.config_id = config.id();
  m.round = round;
  m.epoch_index = epoch_index;
  m.mode = Mode::Thorough;
  m.performance = eval.performance;
  m.polarity = eval.polarity;
  m.selected_lr = lr;
  m.diverged = diverged || !std::isfinite(eval.performance);
  m.sim_time_s = clock_s_;
  return out;
}

RunResult Sm2Scheduler::run() {
  const auto candidates = store_->candidates();
  if (candidates.empty()) throw ConfigError("batch_candidates", "at least one candidate is required");
  // Fail before spending anything if exploration cannot cover the grid.
  for (std::size_t b : candidates) {
    const std::size_t n = partition_.size() * store_->micro_batch_size() / b;
    if (n < grid_.size())
      throw ConfigError("budget.exploration_fraction",
                        "batch size " + std::to_string(b) + " gets " + std::to_string(n) +
                            " exploration batches but the grid has " + std::to_string(grid_.size()) +
                            " points; raise the exploration fraction or lower lr_grid.count");
  }

  std::vector<HyperConfig> configs;
  std::vector<std::unique_ptr<Trainer>> trainers;
  RunStart start;
  start.fingerprint = opts_.fingerprint;
  start.mode = "sm2";
  start.seed = opts_.seed;
  start.weights = opts_.weights;
  start.lr_min = opts_.grid.lr_min;
  start.lr_max = opts_.grid.lr_max;
  start.start_time = opts_.start_time;
  start.sim_time_s = clock_s_;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    configs.emplace_back(ConfigId{static_cast<std::uint32_t>(i)}, candidates[i], opts_.grid.lr_min);
    trainers.push_back(factory_(configs.back()));
    start.configs.push_back({configs.back().id(), candidates[i], opts_.grid.lr_min});
  }
  ledger_->append(start);
  if (configs.size() == 1) configs.front().finalize();

  const StopPolicy policy{opts_.budget.effective_max_rounds(configs.size()), opts_.budget.total_epoch_cap,
                          opts_.stop};
  std::vector<std::uint32_t> epochs(configs.size(), 0);
  std::vector<bool> thorough_diverged(configs.size(), false);
  std::optional<HalvingDecision> last_decision;
  std::optional<ConfigId> final_id;
  if (configs.size() == 1) final_id = configs.front().id();
  std::optional<double> final_perf;
  Polarity polarity = Polarity::HigherIsBetter;

  RunResult result;
  for (std::uint32_t round = 0;; ++round) {
    RoundSummary summary;
    summary.round = round;
    for (const auto& c : configs)
      if (c.live()) summary.live_at_start.push_back(c.id());
    const std::size_t live_at_start = summary.live_at_start.size();

    // Exploratory mode.
    std::vector<RawAttributes> raw;
    for (ConfigId id : summary.live_at_start) {
      auto& c = configs[id.value];
      RawAttributes attr;
      attr.config_id = id;
      double energy = 0.0;
      std::uint32_t n = 0;
      for (std::uint32_t e = 0; e < opts_.budget.exploratory_epochs_per_round; ++e) {
        if (epochs[id.value] >= opts_.budget.total_epoch_cap) break;
        auto out = run_exploratory(c, *trainers[id.value], round, epochs[id.value]++);
        energy += out.energy.energy_wh;
        summary.energy_wh += out.energy.energy_wh;
        ++n;
        attr.performance = out.metrics.performance;
        attr.polarity = out.metrics.polarity;
        attr.selected_lr = out.metrics.selected_lr;
        attr.diverged = out.metrics.diverged || thorough_diverged[id.value];
        polarity = out.metrics.polarity;
        ledger_->append(std::move(out.energy));
        ledger_->append(std::move(out.metrics));
      }
      if (n == 0) {
        // Epoch cap reached: reuse the config's latest LR, no fresh signal.
        attr.selected_lr = c.current_lr();
        attr.diverged = true;
        attr.polarity = polarity;
      } else {
        attr.energy_wh = energy / n;
      }
      raw.push_back(attr);
    }

    // Halving.
    if (live_at_start >= 2) {
      const bool all_diverged =
          std::all_of(raw.begin(), raw.end(), [](const RawAttributes& r) { return r.diverged; });
      if (all_diverged)
        throw RunAborted("every live configuration diverged in round " + std::to_string(round));
      auto decision = decide_halving(round, raw, opts_.weights, opts_.grid.lr_min);
      decision.sim_time_s = clock_s_;
      for (ConfigId id : decision.dropped) configs[id.value].drop(round);
      summary.dropped = decision.dropped;
      last_decision = decision;
      ledger_->append(std::move(decision));
      std::vector<ConfigId> live;
      for (const auto& c : configs)
        if (c.live()) live.push_back(c.id());
      if (live.size() == 1) {
        configs[live.front().value].finalize();
        final_id = live.front();
      }
    }

    // Thorough mode for the survivors.
    const std::uint32_t n_thorough =
        live_at_start == 1 ? opts_.budget.final_thorough_epochs : opts_.budget.thorough_epochs_per_round;
    for (auto& c : configs) {
      if (!c.live()) continue;
      const auto i = c.id().value;
      thorough_diverged[i] = false;
      for (std::uint32_t e = 0; e < n_thorough; ++e) {
        if (epochs[i] >= opts_.budget.total_epoch_cap) break;
        auto out = run_thorough(c, *trainers[i], round, epochs[i]++);
        summary.energy_wh += out.energy.energy_wh;
        const bool diverged = out.metrics.diverged;
        if (final_id && *final_id == c.id() && !diverged)
          final_perf = oriented(out.metrics.performance, out.metrics.polarity);
        ledger_->append(std::move(out.energy));
        ledger_->append(std::move(out.metrics));
        if (!diverged) continue;
        if (final_id && *final_id == c.id())
          throw RunAborted("final configuration " + std::to_string(i) +
                           " diverged during thorough training in round " + std::to_string(round));
        thorough_diverged[i] = true;
        break;
      }
    }

    summary.final_config = final_id;
    summary.final_performance = final_id ? final_perf : std::nullopt;
    for (const auto& c : configs)
      if (c.live()) summary.max_epochs = std::max(summary.max_epochs, epochs[c.id().value]);
    result.rounds.push_back(summary);
    if (should_stop(result.rounds, policy)) break;
  }

  if (!final_id) {
    result.truncated = true;
    final_id = best_of(*last_decision, configs);
    configs[final_id->value].finalize();
  }
  const auto& fc = configs[final_id->value];
  result.final_config = fc.id();
  result.final_batch_size = fc.batch_size();
  result.final_lr = fc.current_lr();
  result.final_snapshot = trainers[fc.id().value]->snapshot();
  const Evaluation eval = trainers[fc.id().value]->evaluate(holdout_);
  result.final_performance = eval.performance;
  result.polarity = eval.polarity;
  for (const auto& r : result.rounds) result.total_energy_wh += r.energy_wh;

  FinalSelection fin;
  fin.config_id = fc.id();
  fin.batch_size = fc.batch_size();
  fin.final_lr = fc.current_lr();
  fin.total_epochs = epochs[fc.id().value];
  fin.total_energy_wh = result.total_energy_wh;
  fin.truncated = result.truncated;
  fin.sim_time_s = clock_s_;
  ledger_->append(fin);
  return result;
}

RunResult Sm2Scheduler::run_vanilla(std::size_t batch_size, double lr, std::size_t n_candidates) {
  const auto cands = store_->candidates();
  if (std::find(cands.begin(), cands.end(), batch_size) == cands.end())
    throw ConfigError("run.vanilla_batch_size", "must be one of the batch candidates");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("run.vanilla_lr", "must be > 0");
  if (n_candidates == 0) n_candidates = 1;

  HyperConfig config(ConfigId{0}, batch_size, lr);
  config.finalize();
  auto trainer = factory_(config);

  RunStart start;
  start.fingerprint = opts_.fingerprint;
  start.mode = "vanilla";
  start.seed = opts_.seed;
  start.weights = opts_.weights;
  start.lr_min = opts_.grid.lr_min;
  start.lr_max = opts_.grid.lr_max;
  start.start_time = opts_.start_time;
  start.configs.push_back({config.id(), batch_size, lr});
  ledger_->append(start);

  const StopPolicy policy{opts_.budget.effective_max_rounds(n_candidates), opts_.budget.total_epoch_cap,
                          opts_.stop};
  const std::uint32_t halving = halving_rounds(n_candidates);
  std::uint32_t epochs = 0;
  std::optional<double> perf;
  RunResult result;
  for (std::uint32_t round = 0;; ++round) {
    RoundSummary summary;
    summary.round = round;
    summary.live_at_start.push_back(config.id());
    summary.final_config = config.id();
    const std::uint32_t n =
        round < halving ? opts_.budget.thorough_epochs_per_round : opts_.budget.final_thorough_epochs;
    for (std::uint32_t e = 0; e < n && epochs < opts_.budget.total_epoch_cap; ++e) {
      auto out = run_thorough(config, *trainer, round, epochs++);
      summary.energy_wh += out.energy.energy_wh;
      const bool diverged = out.metrics.diverged;
      if (!diverged) perf = oriented(out.metrics.performance, out.metrics.polarity);
      ledger_->append(std::move(out.energy));
      ledger_->append(std::move(out.metrics));
      if (diverged) throw RunAborted("vanilla training diverged in round " + std::to_string(round));
    }
    summary.final_performance = perf;
    summary.max_epochs = epochs;
    result.rounds.push_back(summary);
    if (should_stop(result.rounds, policy)) break;
  }

  result.final_config = config.id();
  result.final_batch_size = batch_size;
  result.final_lr = lr;
  result.final_snapshot = trainer->snapshot();
  const Evaluation eval = trainer->evaluate(holdout_);
  result.final_performance = eval.performance;
  result.polarity = eval.polarity;
  for (const auto& r : result.rounds) result.total_energy_wh += r.energy_wh;

  FinalSelection fin;
  fin.config_id = config.id();
  fin.batch_size = batch_size;
  fin.final_lr = lr;
  fin.total_epochs = epochs;
  fin.total_energy_wh = result.total_energy_wh;
  fin.sim_time_s = clock_s_;
  ledger_->append(fin);
  return result;
}

TrainerSnapshot replay_thorough(const RunLedger& ledger, MicroBatchStore& store,
                                const TrainerFactory& factory, bool reshuffle_each_epoch,
                                std::uint64_t seed) {
  const FinalSelection* fin = ledger.final_selection();
  const RunStart* start = ledger.run_start();
  if (!fin || !start) throw ArgumentError("replay needs a completed ledger");
  double initial_lr = 0.0;
  for (const auto& c : start->configs)
    if (c.id == fin->config_id) initial_lr = c.initial_lr;
  if (!(initial_lr > 0.0)) throw ArgumentError("final configuration missing from the run start");

  HyperConfig config(fin->config_id, fin->batch_size, initial_lr);
  auto trainer = factory(config);
  for (const auto& ev : ledger.events()) {
    const auto* m = std::get_if<EpochMetricsRecord>(&ev);
    if (!m || m->config_id != fin->config_id || m->mode != Mode::Thorough) continue;
    const double lr = m->selected_lr;
    BatchStream stream(store, fin->batch_size,
                       thorough_order(store, reshuffle_each_epoch, seed, m->epoch_index));
    while (auto batch = stream.next())
      trainer->train_batches(std::span<const Batch>(&*batch, 1), std::span<const double>(&lr, 1));
  }
  return trainer->snapshot();
}

}  // namespace sm2
