// SPDX-License-Identifier: Apache-2.0
#pragma once
// Energy accounting: the per-epoch energy formula, a power-monitor contract,
// and a deterministic simulated GPU that stands in for hardware telemetry.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sm2/types.hpp"

namespace sm2 {

// Energy of one epoch in watt-hours: mean(power_samples) * duration_s / 3600.
// Throws MeasurementError on an empty sample list, ArgumentError on a
// non-positive duration.
double energy_per_epoch(std::span<const double> power_samples, double duration_s);

// Power and throughput model of a simulated accelerator.
//
//   u(b)          = min(1, b / b_sat)
//   power(b)      = p_idle + (p_max - p_idle) * u^gamma
//   throughput(b) = s_max * u * (1 - kappa * u)          [samples / s]
//
// Power rises faster than throughput near saturation, so energy per sample
// is minimized below full utilization.
struct SimPowerModel {
  double p_idle = 60.0;
  double p_max = 300.0;
  double gamma = 1.4;
  double b_sat = 512.0;
  double s_max = 20000.0;
  double kappa = 0.35;
  std::uint64_t noise_seed = 0;
  double noise_rel = 0.01;

  void validate() const;

  double utilization(std::size_t batch_size) const;
  double noiseless_power(std::size_t batch_size) const;
  double throughput(std::size_t batch_size) const;
};

// Instantaneous power for the `counter`-th sample: noiseless power times a
// multiplicative jitter drawn uniformly from [1 - noise_rel, 1 + noise_rel]
// by a counter-based generator keyed on noise_seed.
double sim_power(const SimPowerModel& model, std::size_t batch_size, std::uint64_t counter = 0);

struct SimEpochEnergy {
  double duration_s = 0.0;
  double energy_wh = 0.0;
};

// Closed-form (noiseless) duration and energy of an epoch of n_samples.
SimEpochEnergy sim_epoch_energy(const SimPowerModel& model, std::size_t batch_size,
                                std::size_t n_samples);

// Behavioural contract for anything that measures power during training.
// Exactly one epoch is open at a time. on_batch() reports that a batch of the
// given size was processed; a hardware monitor may ignore it, the simulated
// one uses it to advance its clock.
class PowerMonitor {
 public:
  virtual ~PowerMonitor() = default;

  virtual void start_epoch(ConfigId config, std::uint32_t round, std::uint32_t epoch_index,
                           Mode mode) = 0;
  virtual void on_batch(std::size_t batch_size) = 0;
  virtual double sample() = 0;
  virtual EpochEnergyRecord end_epoch() = 0;
  virtual double poll_interval_s() const = 0;
};

// Simulated monitor. Time advances analytically by batch_size / throughput
// per processed batch and the power is sampled at every poll tick crossed.
// An epoch that ends before its first tick gets one sample at the end.
class SimulatedPowerMonitor final : public PowerMonitor {
 public:
  explicit SimulatedPowerMonitor(SimPowerModel model, double poll_interval_s = 0.1);

  void start_epoch(ConfigId config, std::uint32_t round, std::uint32_t epoch_index,
                   Mode mode) override;
  void on_batch(std::size_t batch_size) override;
  double sample() override;
  EpochEnergyRecord end_epoch() override;
  double poll_interval_s() const override { return poll_interval_s_; }

  const SimPowerModel& model() const noexcept { return model_; }
  std::uint64_t samples_taken() const noexcept { return counter_; }

 private:
  SimPowerModel model_;
  double poll_interval_s_;
  std::uint64_t counter_ = 0;

  std::optional<EpochEnergyRecord> open_;
  std::size_t current_batch_ = 0;
  double elapsed_s_ = 0.0;
  double next_tick_s_ = 0.0;
};

}  // namespace sm2
