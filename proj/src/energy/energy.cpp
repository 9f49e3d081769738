// SPDX-License-Identifier: Apache-2.0
#include "sm2/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sm2/errors.hpp"
#include "sm2/rng.hpp"

namespace sm2 {

double energy_per_epoch(std::span<const double> power_samples, double duration_s) {
  if (power_samples.empty()) throw MeasurementError("no power samples recorded for the epoch");
  if (!(duration_s > 0.0)) throw ArgumentError("epoch duration must be > 0");
  const double sum = std::accumulate(power_samples.begin(), power_samples.end(), 0.0);
  const double mean_w = sum / static_cast<double>(power_samples.size());
  return mean_w * duration_s / 3600.0;
}

void SimPowerModel::validate() const {
  if (!(p_idle > 0.0)) throw ConfigError("energy.p_idle", "must be > 0");
  if (!(p_idle < p_max)) throw ConfigError("energy.p_max", "must exceed p_idle");
  if (!(gamma > 0.0)) throw ConfigError("energy.gamma", "must be > 0");
  if (!(b_sat > 0.0)) throw ConfigError("energy.b_sat", "must be > 0");
  if (!(s_max > 0.0)) throw ConfigError("energy.s_max", "must be > 0");
  if (!(kappa >= 0.0 && kappa < 1.0)) throw ConfigError("energy.kappa", "must be within [0, 1)");
  if (!(noise_rel >= 0.0 && noise_rel < 1.0))
    throw ConfigError("energy.noise_rel", "must be within [0, 1)");
}

double SimPowerModel::utilization(std::size_t batch_size) const {
  return std::min(1.0, static_cast<double>(batch_size) / b_sat);
}

double SimPowerModel::noiseless_power(std::size_t batch_size) const {
  return p_idle + (p_max - p_idle) * std::pow(utilization(batch_size), gamma);
}

double SimPowerModel::throughput(std::size_t batch_size) const {
  const double u = utilization(batch_size);
  return s_max * u * (1.0 - kappa * u);
}

double sim_power(const SimPowerModel& model, std::size_t batch_size, std::uint64_t counter) {
  if (batch_size == 0) throw ArgumentError("batch size must be >= 1");
  const double p = model.noiseless_power(batch_size);
  if (model.noise_rel == 0.0) return p;
  const double u = to_unit(mix64(model.noise_seed ^ mix64(counter + 0x632be59bd9b4e019ULL)));
  return p * (1.0 + model.noise_rel * (2.0 * u - 1.0));
}

SimEpochEnergy sim_epoch_energy(const SimPowerModel& model, std::size_t batch_size,
                                std::size_t n_samples) {
  if (batch_size == 0) throw ArgumentError("batch size must be >= 1");
  if (n_samples == 0) throw ArgumentError("an epoch needs at least one sample");
  SimEpochEnergy out;
  out.duration_s = static_cast<double>(n_samples) / model.throughput(batch_size);
  out.energy_wh = model.noiseless_power(batch_size) * out.duration_s / 3600.0;
  return out;
}

SimulatedPowerMonitor::SimulatedPowerMonitor(SimPowerModel model, double poll_interval_s)
    : model_(model), poll_interval_s_(poll_interval_s) {
  model_.validate();
  if (!(poll_interval_s > 0.0)) throw ConfigError("energy.poll_interval_s", "must be > 0");
}

void SimulatedPowerMonitor::start_epoch(ConfigId config, std::uint32_t round,
                                        std::uint32_t epoch_index, Mode mode) {
  if (open_) throw MeasurementError("start_epoch called while an epoch is still open");
  EpochEnergyRecord rec;
  rec.config_id = config;
  rec.round = round;
  rec.epoch_index = epoch_index;
  rec.mode = mode;
  open_ = std::move(rec);
  current_batch_ = 0;
  elapsed_s_ = 0.0;
  next_tick_s_ = poll_interval_s_;
}

void SimulatedPowerMonitor::on_batch(std::size_t batch_size) {
  if (!open_) throw MeasurementError("on_batch called outside an epoch");
  if (batch_size == 0) throw ArgumentError("batch size must be >= 1");
  current_batch_ = batch_size;
  open_->batch_size = std::max(open_->batch_size, batch_size);
  elapsed_s_ += static_cast<double>(batch_size) / model_.throughput(batch_size);
  while (next_tick_s_ <= elapsed_s_) {
    sample();
    next_tick_s_ += poll_interval_s_;
  }
}

double SimulatedPowerMonitor::sample() {
  if (!open_) throw MeasurementError("sample called outside an epoch");
  // Before the first batch the device idles.
  const double w = current_batch_ == 0 ? model_.p_idle : sim_power(model_, current_batch_, counter_);
  ++counter_;
  open_->power_samples.push_back(w);
  return w;
}

EpochEnergyRecord SimulatedPowerMonitor::end_epoch() {
  if (!open_) throw MeasurementError("end_epoch called without start_epoch");
  if (current_batch_ == 0) {
    open_.reset();
    throw MeasurementError("epoch ended without processing any batch");
  }
  if (open_->power_samples.empty()) sample();
  EpochEnergyRecord rec = std::move(*open_);
  open_.reset();
  rec.duration_s = elapsed_s_;
  rec.energy_wh = energy_per_epoch(rec.power_samples, rec.duration_s);
  return rec;
}

}  // namespace sm2
