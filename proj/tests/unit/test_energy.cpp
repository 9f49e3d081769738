// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sm2/energy.hpp"
#include "sm2/errors.hpp"
#include "sm2/rng.hpp"

using namespace sm2;

TEST_CASE("energy_per_epoch worked examples") {
  CHECK(energy_per_epoch(std::vector<double>{200, 200}, 1800) == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(energy_per_epoch(std::vector<double>{100}, 3600) == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(energy_per_epoch(std::vector<double>{150, 250, 200}, 900) == doctest::Approx(50.0).epsilon(1e-15));
}

TEST_CASE("energy_per_epoch rejects empty samples and bad durations") {
  CHECK_THROWS_AS(energy_per_epoch(std::vector<double>{}, 10), MeasurementError);
  CHECK_THROWS_AS(energy_per_epoch(std::vector<double>{1.0}, 0.0), ArgumentError);
  CHECK_THROWS_AS(energy_per_epoch(std::vector<double>{1.0}, -1.0), ArgumentError);
}

TEST_CASE("sim_power closed form") {
  SimPowerModel m;
  m.noise_rel = 0.0;
  CHECK(sim_power(m, 512) == 300.0);
  CHECK(sim_power(m, 4096) == 300.0);
  CHECK(sim_power(m, 256) == doctest::Approx(oracle::kPower256).epsilon(1e-14));
  CHECK(sim_power(m, 256) == doctest::Approx(60.0 + 240.0 * std::pow(0.5, 1.4)).epsilon(1e-15));
}

TEST_CASE("sim_power noise is deterministic and bounded") {
  SimPowerModel m;
  m.noise_seed = 42;
  for (std::uint64_t c = 0; c < 200; ++c) {
    const double p = sim_power(m, 64, c);
    CHECK(p == sim_power(m, 64, c));
    CHECK(std::abs(p / m.noiseless_power(64) - 1.0) <= m.noise_rel + 1e-15);
  }
  SimPowerModel other = m;
  other.noise_seed = 43;
  CHECK(sim_power(m, 64, 7) != sim_power(other, 64, 7));
}

TEST_CASE("saturation clamps utilization") {
  SimPowerModel m;
  m.noise_rel = 0.0;
  const auto a = sim_epoch_energy(m, 512, 100000);
  const auto b = sim_epoch_energy(m, 1024, 100000);
  CHECK(a.duration_s == b.duration_s);
  CHECK(a.energy_wh == b.energy_wh);
  CHECK(m.throughput(512) == m.throughput(1024));
}

TEST_CASE("default model has an interior energy optimum") {
  SimPowerModel m;
  const std::vector<std::size_t> cands{8, 16, 32, 64, 128, 256, 512, 1024};
  std::size_t best = 0;
  double best_e = INFINITY;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double e = sim_epoch_energy(m, cands[i], 1'000'000).energy_wh;
    CHECK(e * 3600.0 / 1e6 == doctest::Approx(oracle::kJoulesPerSample[i]).epsilon(1e-8));
    if (e < best_e) best_e = e, best = cands[i];
  }
  CHECK(best == oracle::kEnergyOptimalBatch);
}

TEST_CASE("kappa = 0 gives energy per sample p(b) / (s_max u)") {
  SimPowerModel m;
  m.kappa = 0.0;
  for (std::size_t b : {8u, 64u, 512u, 1024u}) {
    const double u = std::min(1.0, static_cast<double>(b) / m.b_sat);
    const double expect = m.noiseless_power(b) / (m.s_max * u) * 1000.0 / 3600.0;
    CHECK(sim_epoch_energy(m, b, 1000).energy_wh == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("simulated monitor matches the closed form without noise") {
  SimPowerModel m;
  m.noise_rel = 0.0;
  SimulatedPowerMonitor mon(m, 0.1);
  mon.start_epoch(ConfigId{3}, 1, 4, Mode::Thorough);
  for (int i = 0; i < 500; ++i) mon.on_batch(128);
  const auto rec = mon.end_epoch();
  const auto ref = sim_epoch_energy(m, 128, 500 * 128);
  CHECK(rec.duration_s == doctest::Approx(ref.duration_s).epsilon(1e-12));
  CHECK(rec.energy_wh == doctest::Approx(ref.energy_wh).epsilon(1e-12));
  CHECK(rec.config_id == ConfigId{3});
  CHECK(rec.round == 1);
  CHECK(rec.epoch_index == 4);
  CHECK(rec.batch_size == 128);
  CHECK(!rec.power_samples.empty());
  CHECK(rec.energy_wh == energy_per_epoch(rec.power_samples, rec.duration_s));
}

TEST_CASE("short epoch still gets one sample") {
  SimPowerModel m;
  SimulatedPowerMonitor mon(m, 10.0);
  mon.start_epoch(ConfigId{0}, 0, 0, Mode::Exploratory);
  mon.on_batch(8);
  const auto rec = mon.end_epoch();
  CHECK(rec.power_samples.size() == 1);
  CHECK(rec.mode == Mode::Exploratory);
}

TEST_CASE("power model validation") {
  SimPowerModel m;
  m.p_max = 10.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = SimPowerModel{};
  m.kappa = 1.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
