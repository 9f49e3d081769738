// SPDX-License-Identifier: Apache-2.0
#include "sm2/types.hpp"

#include <charconv>
#include <cmath>

#include "sm2/errors.hpp"

namespace sm2 {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(ConfigStatus s) noexcept {
  switch (s) {
    case ConfigStatus::Active: return "active";
    case ConfigStatus::Dropped: return "dropped";
    case ConfigStatus::Final: return "final";
  }
  return "active";
}

std::string_view to_string(Mode m) noexcept {
  return m == Mode::Exploratory ? "exploratory" : "thorough";
}

std::string_view to_string(Polarity p) noexcept {
  return p == Polarity::HigherIsBetter ? "higher_is_better" : "lower_is_better";
}

Mode mode_from_string(std::string_view s) {
  if (s == "exploratory") return Mode::Exploratory;
  if (s == "thorough") return Mode::Thorough;
  throw ArgumentError("unknown mode '" + std::string(s) + "'");
}

Polarity polarity_from_string(std::string_view s) {
  if (s == "higher_is_better") return Polarity::HigherIsBetter;
  if (s == "lower_is_better") return Polarity::LowerIsBetter;
  throw ArgumentError("unknown polarity '" + std::string(s) + "'");
}

HyperConfig::HyperConfig(ConfigId id, std::size_t batch_size, double initial_lr)
    : id_(id), batch_size_(batch_size), current_lr_(initial_lr) {
  if (batch_size == 0) throw ArgumentError("batch size must be >= 1");
  if (!(initial_lr > 0.0)) throw ArgumentError("learning rate must be > 0");
}

void HyperConfig::set_lr(double lr, double lr_min, double lr_max) {
  if (!(lr >= lr_min && lr <= lr_max)) {
    throw ArgumentError("learning rate " + std::to_string(lr) + " outside search range");
  }
  current_lr_ = lr;
}

void HyperConfig::drop(std::uint32_t round) {
  if (status_ != ConfigStatus::Active) {
    throw ArgumentError("config " + std::to_string(id_.value) + " cannot be dropped from status " +
                        std::string(to_string(status_)));
  }
  status_ = ConfigStatus::Dropped;
  dropped_in_round_ = round;
}

void HyperConfig::finalize() {
  if (status_ == ConfigStatus::Final) return;
  if (status_ != ConfigStatus::Active) {
    throw ArgumentError("config " + std::to_string(id_.value) + " cannot become final from status " +
                        std::string(to_string(status_)));
  }
  status_ = ConfigStatus::Final;
}

void RunBudget::validate() const {
  if (max_rounds && *max_rounds == 0) throw ConfigError("budget.max_rounds", "must be >= 1");
  if (exploratory_epochs_per_round == 0)
    throw ConfigError("budget.exploratory_epochs_per_round", "must be >= 1");
  if (thorough_epochs_per_round == 0)
    throw ConfigError("budget.thorough_epochs_per_round", "must be >= 1");
  if (final_thorough_epochs == 0) throw ConfigError("budget.final_thorough_epochs", "must be >= 1");
  if (!(exploration_fraction > 0.0 && exploration_fraction <= 1.0))
    throw ConfigError("budget.exploration_fraction", "must be within (0, 1]");
  if (total_epoch_cap == 0) throw ConfigError("budget.total_epoch_cap", "must be >= 1");
}

std::uint32_t halving_rounds(std::size_t n) noexcept {
  std::uint32_t r = 0;
  std::size_t active = n;
  while (active > 1) {
    active = (active + 1) / 2;
    ++r;
  }
  return r;
}

std::uint32_t RunBudget::effective_max_rounds(std::size_t n_configs) const {
  return max_rounds ? *max_rounds : halving_rounds(n_configs) + 2;
}

void ObjectiveWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("objective.alpha", "must be within [0, 1], got " + shortest(alpha));
  if (!(beta >= 0.0 && beta <= 1.0))
    throw ConfigError("objective.beta", "must be within [0, 1], got " + shortest(beta));
}

void EpochEnergyRecord::validate() const {
  if (power_samples.empty()) throw MeasurementError("energy record without power samples");
  for (double w : power_samples) {
    if (!(w > 0.0) || !std::isfinite(w)) throw MeasurementError("power samples must be finite and > 0");
  }
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw MeasurementError("epoch duration must be > 0");
  if (!(energy_wh >= 0.0) || !std::isfinite(energy_wh))
    throw MeasurementError("energy must be finite and >= 0");
}

void EpochMetricsRecord::validate() const {
  if (mode == Mode::Thorough && exploration)
    throw ArgumentError("thorough metrics records carry no exploration trace");
  if (!diverged && !std::isfinite(performance))
    throw ArgumentError("performance must be finite unless the epoch diverged");
}

}  // namespace sm2
