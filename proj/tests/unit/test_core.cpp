// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sm2/errors.hpp"
#include "sm2/ledger.hpp"
#include "sm2/types.hpp"

using namespace sm2;
namespace fs = std::filesystem;

namespace {

RunStart start_with(std::uint32_t n) {
  RunStart s;
  s.fingerprint = "f";
  s.mode = "sm2";
  s.lr_min = 0.001;
  s.lr_max = 1.0;
  s.start_time = "2024-03-01T12:00:00Z";
  for (std::uint32_t i = 0; i < n; ++i) s.configs.push_back({ConfigId{i}, 8u << i, 0.001});
  return s;
}

EpochEnergyRecord energy(std::uint32_t id, std::uint32_t round, std::uint32_t epoch, double wh,
                         Mode mode = Mode::Thorough) {
  EpochEnergyRecord e;
  e.config_id = ConfigId{id};
  e.round = round;
  e.epoch_index = epoch;
  e.mode = mode;
  e.batch_size = 8;
  e.power_samples = {100.0, 110.0};
  e.duration_s = 60.0;
  e.energy_wh = wh;
  return e;
}

EpochMetricsRecord metrics(std::uint32_t id, std::uint32_t round, std::uint32_t epoch, Mode mode) {
  EpochMetricsRecord m;
  m.config_id = ConfigId{id};
  m.round = round;
  m.epoch_index = epoch;
  m.mode = mode;
  m.performance = 0.5;
  m.selected_lr = 0.01;
  if (mode == Mode::Exploratory) {
    ExplorationTrace t;
    t.losses = {{0.001, 1.0}, {0.01, 0.5}, {0.1, INFINITY}};
    t.curvature = {INFINITY};
    t.fallback = true;
    m.exploration = t;
  }
  return m;
}

}  // namespace

TEST_CASE("first append") {
  RunLedger l;
  CHECK(l.empty());
  l.append(start_with(2));
  CHECK(l.size() == 1);
  CHECK(ledger_total_energy(l) == 0.0);
}

TEST_CASE("events must start with run_start") {
  RunLedger l;
  CHECK_THROWS_AS(l.append(energy(0, 0, 0, 1.0)), OrderingError);
  l.append(start_with(1));
  CHECK_THROWS_AS(l.append(start_with(1)), OrderingError);
}

TEST_CASE("per-config progress never goes backwards") {
  RunLedger l;
  l.append(start_with(2));
  l.append(energy(0, 2, 5, 1.0));
  CHECK_THROWS_AS(l.append(energy(0, 1, 6, 1.0)), OrderingError);
  l.append(energy(1, 1, 0, 1.0));  // other configs are independent
  CHECK_THROWS_AS(l.append(energy(7, 0, 0, 1.0)), OrderingError);
}

TEST_CASE("eight exploratory epochs") {
  RunLedger l;
  l.append(start_with(8));
  for (std::uint32_t i = 0; i < 8; ++i) {
    l.append(energy(i, 0, 0, 1.0, Mode::Exploratory));
    l.append(metrics(i, 0, 0, Mode::Exploratory));
  }
  std::size_t ne = 0, nm = 0;
  for (const auto& ev : l.events()) {
    ne += std::holds_alternative<EpochEnergyRecord>(ev);
    nm += std::holds_alternative<EpochMetricsRecord>(ev);
  }
  CHECK(ne == 8);
  CHECK(nm == 8);
}

TEST_CASE("total energy sums every record") {
  RunLedger l;
  l.append(start_with(2));
  l.append(energy(0, 0, 0, 10.0));
  l.append(energy(1, 0, 0, 5.5));
  CHECK(ledger_total_energy(l) == 15.5);
  CHECK(ledger_round_energy(l) == std::vector<double>{15.5});
}

TEST_CASE("lifecycle rules") {
  RunLedger l;
  l.append(start_with(4));
  HalvingDecision h;
  h.round = 0;
  h.dropped = {ConfigId{0}, ConfigId{1}};
  l.append(h);
  CHECK_THROWS_AS(l.append(energy(1, 1, 0, 1.0)), OrderingError);
  h.round = 0;
  h.dropped = {ConfigId{2}};
  CHECK_THROWS_AS(l.append(h), OrderingError);
  h.round = 1;
  h.dropped = {ConfigId{0}};
  CHECK_THROWS_AS(l.append(h), OrderingError);
  FinalSelection f;
  f.config_id = ConfigId{1};
  CHECK_THROWS_AS(l.append(f), OrderingError);
  f.config_id = ConfigId{3};
  l.append(f);
  CHECK(l.final_selection()->config_id == ConfigId{3});
  CHECK_THROWS_AS(l.append(energy(3, 5, 0, 1.0)), OrderingError);
}

TEST_CASE("record validation") {
  RunLedger l;
  l.append(start_with(1));
  auto e = energy(0, 0, 0, 1.0);
  e.power_samples.clear();
  CHECK_THROWS_AS(l.append(e), MeasurementError);
  auto m = metrics(0, 0, 0, Mode::Thorough);
  m.exploration = ExplorationTrace{};
  CHECK_THROWS_AS(l.append(m), ArgumentError);
  m = metrics(0, 0, 0, Mode::Thorough);
  m.performance = NAN;
  CHECK_THROWS_AS(l.append(m), ArgumentError);
  m.diverged = true;
  CHECK_NOTHROW(l.append(m));
}

TEST_CASE("JSON lines round trip") {
  const fs::path p = fs::temp_directory_path() / "sm2_test_ledger.jsonl";
  RunLedger l;
  l.attach_file(p);
  l.append(start_with(2));
  l.append(energy(0, 0, 0, 1.25, Mode::Exploratory));
  l.append(metrics(0, 0, 0, Mode::Exploratory));
  l.append(energy(1, 0, 0, 2.5, Mode::Exploratory));
  l.append(metrics(1, 0, 0, Mode::Exploratory));
  HalvingDecision h;
  h.dropped = {ConfigId{1}};
  h.tie_breaks = {"tie"};
  HalvingEntry e;
  e.raw.config_id = ConfigId{0};
  e.score = 0.75;
  h.entries.push_back(e);
  l.append(h);
  FinalSelection f;
  f.config_id = ConfigId{0};
  f.total_energy_wh = 3.75;
  l.append(f);

  const RunLedger r = RunLedger::read(p);
  REQUIRE(r.size() == l.size());
  CHECK(ledger_total_energy(r) == 3.75);
  const auto& m = std::get<EpochMetricsRecord>(r.events()[2]);
  REQUIRE(m.exploration);
  CHECK(m.exploration->losses[2].mean_loss == INFINITY);
  CHECK(m.exploration->fallback);
  CHECK(std::get<HalvingDecision>(r.events()[5]).tie_breaks == std::vector<std::string>{"tie"});
  CHECK(r.run_start()->start_time == "2024-03-01T12:00:00Z");

  // Re-serializing gives identical bytes.
  std::ifstream in(p);
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) CHECK(to_json(r.events()[i++], "2024-03-01T12:00:00Z").dump() == line);
  fs::remove(p);
}

TEST_CASE("malformed ledger lines report the line") {
  const fs::path p = fs::temp_directory_path() / "sm2_test_bad_ledger.jsonl";
  {
    RunLedger l;
    l.attach_file(p);
    l.append(start_with(1));
  }
  std::ofstream(p, std::ios::app) << "{\"type\":\"epoch_energy\",\"config_id\":0}\n";
  try {
    RunLedger::read(p);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  fs::remove(p);
  CHECK_THROWS_AS(RunLedger::read(p), IoError);
}

TEST_CASE("timestamps come from the simulated clock") {
  CHECK(iso_timestamp("1970-01-01T00:00:00Z", 0.0) == "1970-01-01T00:00:00.000Z");
  CHECK(iso_timestamp("2024-02-28T23:59:59Z", 86401.5) == "2024-03-01T00:00:00.500Z");
  CHECK_THROWS_AS(iso_timestamp("yesterday", 0.0), ArgumentError);
}

TEST_CASE("config status transitions") {
  HyperConfig c(ConfigId{2}, 16, 0.001);
  c.set_lr(0.5, 0.001, 1.0);
  CHECK(c.current_lr() == 0.5);
  CHECK_THROWS_AS(c.set_lr(2.0, 0.001, 1.0), ArgumentError);
  c.drop(3);
  CHECK(c.status() == ConfigStatus::Dropped);
  CHECK(*c.dropped_in_round() == 3);
  CHECK_THROWS_AS(c.finalize(), ArgumentError);
  HyperConfig d(ConfigId{1}, 8, 0.001);
  d.finalize();
  CHECK_THROWS_AS(d.drop(0), ArgumentError);
}

TEST_CASE("budget rounds") {
  CHECK(halving_rounds(1) == 0);
  CHECK(halving_rounds(2) == 1);
  CHECK(halving_rounds(3) == 2);
  CHECK(halving_rounds(8) == 3);
  RunBudget b;
  CHECK(b.effective_max_rounds(8) == 5);
  b.max_rounds = 2;
  CHECK(b.effective_max_rounds(8) == 2);
  b.exploration_fraction = 0.0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
}
