// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "sm2/errors.hpp"
#include "sm2/report.hpp"
#include "support.hpp"

using namespace sm2;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    rows.emplace_back();
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) rows.back().push_back(cell);
    if (!line.empty() && line.back() == ',') rows.back().push_back("");
  }
  return rows;
}

RunLedger small_run(double alpha, const std::string& mode = "sm2", const std::string& fp = "fp") {
  static const Dataset d = generate_synthetic(TwoGaussiansSpec{8000, 4, 3.0}, 21, 0.1);
  const std::vector<std::size_t> cands{8, 16, 32, 64};
  MicroBatchStore store(d, cands);
  SimulatedPowerMonitor mon(SimPowerModel{});
  RunLedger ledger;
  SchedulerOptions o;
  o.weights.alpha = alpha;
  o.fingerprint = fp;
  BuiltinLearnerSpec spec;
  spec.kind = LearnerKind::LogisticClassifier;
  spec.input_dim = 4;
  spec.output_dim = 2;
  Sm2Scheduler s(o, d, store, mon, ledger, [&](const HyperConfig&) { return make_learner(spec); });
  if (mode == "vanilla") s.run_vanilla(32, 0.05, 4);
  else s.run();
  return ledger;
}

}  // namespace

TEST_CASE("trace files per configuration") {
  const auto run = sm2::testing::run_rig(0.75);
  const auto traces = trace_csvs(run.ledger);
  REQUIRE(traces.size() == 8);
  double total = 0.0;
  std::map<std::uint32_t, std::uint32_t> dropped_in;
  for (const auto& ev : run.ledger.events())
    if (const auto* h = std::get_if<HalvingDecision>(&ev))
      for (auto id : h->dropped) dropped_in[id.value] = h->round;

  for (std::uint32_t id = 0; id < 8; ++id) {
    const auto rows = parse_csv(traces.at("trace_config" + std::to_string(id) + ".csv"));
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == std::vector<std::string>{"round", "epoch", "mode", "exploratory", "performance",
                                              "energy_wh", "lr", "diverged", "sim_time_s"});
    bool has_explore = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      has_explore |= rows[i][3] == "1";
      total += std::stod(rows[i][5]);
    }
    CHECK(has_explore);
    if (dropped_in.count(id)) CHECK(std::stoul(rows.back()[0]) == dropped_in[id]);
  }
  CHECK(total == doctest::Approx(ledger_total_energy(run.ledger)).epsilon(1e-12));
}

TEST_CASE("exploration traces mark the window and the selection") {
  const auto ledger = small_run(0.75);
  const auto files = exploration_csvs(ledger);
  REQUIRE(!files.empty());
  for (const auto& [name, body] : files) {
    const auto rows = parse_csv(body);
    REQUIRE(rows.size() == 21);
    int selected = 0, in_window = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      selected += rows[i][5] == "1";
      in_window += rows[i][4] == "1";
    }
    CHECK(selected == 1);
    CHECK((in_window == 5 || in_window == 0));
  }
}

TEST_CASE("reports are a pure function of the ledger") {
  const auto a = small_run(0.75);
  const auto b = small_run(0.75);
  CHECK(trace_csvs(a) == trace_csvs(b));
  CHECK(exploration_csvs(a) == exploration_csvs(b));
  CHECK(summary_text(a) == summary_text(b));
  const fs::path dir = fs::temp_directory_path() / "sm2_test_report";
  fs::remove_all(dir);
  const auto written = write_report(a, dir);
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK(fs::exists(dir / "traces" / "trace_config0.csv"));
  CHECK(written.size() == trace_csvs(a).size() + exploration_csvs(a).size() + 1);
  fs::remove_all(dir);
}

TEST_CASE("parity") {
  CHECK(parity(45.8, 26.0) == doctest::Approx(45.8 / 26.0));
  CHECK(std::round(parity(45.8, 26.0) * 100) / 100 == 1.76);
  CHECK(parity(12.0, 12.0) == 1.0);
  CHECK(parity(40.7, 69.4) == doctest::Approx(0.5865).epsilon(1e-4));
  CHECK(symmetric_parity(40.7, 69.4) == doctest::Approx(1.7052).epsilon(1e-4));
  CHECK_THROWS_AS(parity(0.0, 1.0), ArgumentError);
}

TEST_CASE("published totals") {
  for (const auto& row : oracle::kTable) {
    const auto s = compare_totals(row.name, row.alpha1, row.sm2, row.vanilla);
    CHECK(std::lround(s.reduction_pct) == row.reduction_pct);
    CHECK(std::abs(s.symmetric_parity - row.symmetric_parity) <= 0.01);
  }
  CHECK(compare_totals("x", 28.0, 14.8, 16.4).reduction_pct == doctest::Approx(47.142857).epsilon(1e-6));
  CHECK(compare_totals("x", 49.7, 45.8, 26.0).reduction_pct == doctest::Approx(7.847082).epsilon(1e-6));
  const auto rows = std::vector{compare_totals("lstm", 28.0, 14.8, 16.4)};
  CHECK(comparison_text(rows).find("-47.14%") != std::string::npos);
  CHECK(comparison_csv(rows).rfind("experiment,", 0) == 0);
}

TEST_CASE("compare checks its inputs") {
  const auto a1 = small_run(1.0);
  const auto sm = small_run(0.75);
  const auto va = small_run(0.75, "vanilla");
  const auto s = compare(a1, sm, va, "gauss");
  CHECK(s.energy_alpha1_wh == ledger_total_energy(a1));
  CHECK(compare(a1, a1, va).reduction_pct == 0.0);
  CHECK_THROWS_AS(compare(sm, sm, va), ComparisonError);
  CHECK_THROWS_AS(compare(a1, sm, sm), ComparisonError);
  CHECK_THROWS_AS(compare(a1, small_run(0.75, "sm2", "other"), va), ComparisonError);
  CHECK_THROWS_AS(compare(a1, RunLedger{}, va), ComparisonError);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(-INFINITY) == "-inf");
  CHECK(format_number(NAN) == "nan");
  CHECK(format_number(1e-7) == "1e-07");
}
