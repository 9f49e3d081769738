// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sm2/errors.hpp"
#include "sm2/scheduler.hpp"
#include "support.hpp"

using namespace sm2;
using sm2::testing::halving_drops;
using sm2::testing::survivor_counts;

namespace {

struct Fixture {
  Dataset data;
  std::vector<std::size_t> cands;
  MicroBatchStore store;
  SimulatedPowerMonitor monitor;
  RunLedger ledger;
  BuiltinLearnerSpec spec;

  Fixture(Dataset d, std::vector<std::size_t> c, LearnerKind kind, double noise = 0.01)
      : data(std::move(d)), cands(std::move(c)), store(data, cands), monitor(model(noise)) {
    spec.kind = kind;
    spec.input_dim = data.input_dim();
    spec.output_dim = data.output_dim();
    spec.seed = 12;
  }

  static SimPowerModel model(double noise) {
    SimPowerModel m;
    m.noise_rel = noise;
    return m;
  }

  TrainerFactory factory() const {
    return [s = spec](const HyperConfig&) -> std::unique_ptr<Trainer> { return make_learner(s); };
  }
};

Dataset gaussians() { return generate_synthetic(TwoGaussiansSpec{8000, 4, 3.0}, 21, 0.1); }

RoundSummary round_with(std::optional<double> perf) {
  RoundSummary r;
  r.final_performance = perf;
  if (perf) r.final_config = ConfigId{0};
  return r;
}

// Loss is NaN from the first step on.
class ExplodingTrainer final : public Trainer {
 public:
  std::vector<double> train_batches(std::span<const Batch>, std::span<const double>) override {
    throw DivergenceError(0, NAN);
  }
  Evaluation evaluate(const Batch&) const override { return {NAN, Polarity::HigherIsBetter}; }
  TrainerSnapshot snapshot() const override { return {}; }
  void restore(const TrainerSnapshot&) override {}
  void reseed(std::uint64_t) override {}
  std::unique_ptr<Trainer> clone() const override { return std::make_unique<ExplodingTrainer>(); }
};

}  // namespace

TEST_CASE("should_stop: round limit and epoch cap") {
  StopPolicy p{3, 100, {}};
  std::vector<RoundSummary> h(2);
  CHECK(!should_stop(h, p));
  h.emplace_back();
  CHECK(should_stop(h, p));
  h.resize(1);
  h[0].max_epochs = 100;
  CHECK(should_stop(h, p));
}

TEST_CASE("should_stop: plateau") {
  StopPolicy p{50, 100, {true, 2, 1e-4}};
  std::vector<RoundSummary> h{round_with(std::nullopt), round_with(0.5), round_with(0.6), round_with(0.7)};
  CHECK(!should_stop(h, p));
  h = {round_with(0.5), round_with(0.5)};
  CHECK(!should_stop(h, p));
  h.push_back(round_with(0.50005));
  CHECK(should_stop(h, p));
  p.settings.plateau = false;
  CHECK(!should_stop(h, p));
}

TEST_CASE("exploratory epoch leaves the trainer untouched") {
  Fixture f(gaussians(), {8, 16, 32, 64}, LearnerKind::LogisticClassifier, 0.0);
  Sm2Scheduler s(SchedulerOptions{}, f.data, f.store, f.monitor, f.ledger, f.factory());
  HyperConfig c(ConfigId{1}, 16, 0.001);
  auto t = make_learner(f.spec);
  const auto before = t->snapshot();
  const auto out = s.run_exploratory(c, *t, 0, 0);
  CHECK(t->snapshot() == before);
  CHECK(out.metrics.selected_lr == out.selection.selected_lr);
  CHECK(c.current_lr() == out.selection.selected_lr);
  CHECK(out.metrics.mode == Mode::Exploratory);
  REQUIRE(out.metrics.exploration);
  CHECK(out.metrics.exploration->losses.size() == 20);
  CHECK(f.ledger.empty());

  // Same batch size and power, a quarter of the samples.
  const auto th = s.run_thorough(c, *t, 0, 1);
  const double ratio = out.energy.energy_wh / th.energy.energy_wh;
  CHECK(ratio == doctest::Approx(0.25).epsilon(0.01));
}

TEST_CASE("thorough epochs under the noiseless simulator") {
  Fixture f(generate_synthetic(QuadraticBowlSpec{8000, 4, 10.0, 20.0}, 2, 0.1), {8, 16}, LearnerKind::LinearRegression,
            0.0);
  Sm2Scheduler s(SchedulerOptions{}, f.data, f.store, f.monitor, f.ledger, f.factory());
  HyperConfig c(ConfigId{0}, 16, 0.001);
  auto t = make_learner(f.spec);
  s.run_exploratory(c, *t, 0, 0);
  CHECK(c.current_lr() < 2.0 / 20.0);
  std::vector<ThoroughOutcome> outs;
  for (std::uint32_t e = 1; e <= 5; ++e) outs.push_back(s.run_thorough(c, *t, 0, e));
  for (const auto& o : outs) {
    CHECK(o.energy.energy_wh == doctest::Approx(outs[0].energy.energy_wh).epsilon(1e-12));
    CHECK(o.metrics.mode == Mode::Thorough);
    CHECK(!o.metrics.exploration);
    CHECK(!o.metrics.diverged);
    CHECK(o.metrics.selected_lr == c.current_lr());
  }
  for (std::size_t i = 1; i < outs.size(); ++i)
    CHECK(outs[i].metrics.performance >= outs[i - 1].metrics.performance - 1e-6);
}

TEST_CASE("four configurations halve down to one") {
  Fixture f(gaussians(), {8, 16, 32, 64}, LearnerKind::LogisticClassifier);
  Sm2Scheduler s(SchedulerOptions{}, f.data, f.store, f.monitor, f.ledger, f.factory());
  const auto r = s.run();
  CHECK(survivor_counts(f.ledger) == std::vector<std::size_t>{4, 2, 1});
  REQUIRE(f.ledger.final_selection());
  CHECK(f.ledger.final_selection()->config_id == r.final_config);
  CHECK(!r.truncated);
  CHECK(r.total_energy_wh == doctest::Approx(ledger_total_energy(f.ledger)).epsilon(1e-12));
  CHECK(replay_thorough(f.ledger, f.store, f.factory(), false, 0) == r.final_snapshot);
}

TEST_CASE("one configuration only tunes its learning rate") {
  Fixture f(gaussians(), {32}, LearnerKind::LogisticClassifier);
  Sm2Scheduler s(SchedulerOptions{}, f.data, f.store, f.monitor, f.ledger, f.factory());
  const auto r = s.run();
  CHECK(halving_drops(f.ledger).empty());
  CHECK(r.final_config == ConfigId{0});
  CHECK(r.final_lr > 0.001);
  // Single live config: every round trains the final epoch count.
  std::uint32_t thorough = 0;
  for (const auto& ev : f.ledger.events())
    if (const auto* m = std::get_if<EpochMetricsRecord>(&ev); m && m->mode == Mode::Thorough && m->round == 0)
      ++thorough;
  CHECK(thorough == 10);
}

TEST_CASE("efficient config wins when performance ties") {
  const auto run = sm2::testing::run_rig(0.75);
  CHECK(halving_drops(run.ledger) == oracle::kRigDropsAlpha075);
  CHECK(run.result.final_config.value == oracle::kRigFinalAlpha075);
  CHECK(run.result.final_batch_size == oracle::kEnergyOptimalBatch);
}

TEST_CASE("every configuration diverging aborts the run") {
  Fixture f(gaussians(), {8, 16}, LearnerKind::LogisticClassifier);
  Sm2Scheduler s(SchedulerOptions{}, f.data, f.store, f.monitor, f.ledger,
                 [](const HyperConfig&) { return std::make_unique<ExplodingTrainer>(); });
  CHECK_THROWS_AS(s.run(), RunAborted);
  CHECK(f.ledger.run_start());
  CHECK(!f.ledger.final_selection());
}

TEST_CASE("too small an exploration partition is a config error") {
  Fixture f(generate_synthetic(TwoGaussiansSpec{2000, 2, 3.0}, 1, 0.1), {8, 64}, LearnerKind::LogisticClassifier);
  Sm2Scheduler s(SchedulerOptions{}, f.data, f.store, f.monitor, f.ledger, f.factory());
  CHECK_THROWS_WITH_AS(s.run(), doctest::Contains("exploration"), ConfigError);
  CHECK(f.ledger.empty());
}

TEST_CASE("vanilla follows the final config's epoch schedule") {
  Fixture f(gaussians(), {8, 16, 32, 64}, LearnerKind::LogisticClassifier);
  SchedulerOptions o;
  o.stop.plateau = false;
  Sm2Scheduler s(o, f.data, f.store, f.monitor, f.ledger, f.factory());
  const auto r = s.run_vanilla(32, 0.05, 4);
  // 2 halving rounds of 5 epochs, then 2 rounds of 10.
  CHECK(f.ledger.final_selection()->total_epochs == 30);
  CHECK(r.rounds.size() == 4);
  CHECK(f.ledger.run_start()->mode == "vanilla");
  CHECK(replay_thorough(f.ledger, f.store, f.factory(), false, 0) == r.final_snapshot);
  CHECK_THROWS_AS(s.run_vanilla(24, 0.05, 4), ConfigError);
}

TEST_CASE("reshuffled epochs replay identically") {
  Fixture f(gaussians(), {8, 16}, LearnerKind::LogisticClassifier);
  SchedulerOptions o;
  o.reshuffle_each_epoch = true;
  o.seed = 77;
  Sm2Scheduler s(o, f.data, f.store, f.monitor, f.ledger, f.factory());
  const auto r = s.run();
  CHECK(replay_thorough(f.ledger, f.store, f.factory(), true, 77) == r.final_snapshot);
  CHECK(replay_thorough(f.ledger, f.store, f.factory(), false, 77) != r.final_snapshot);
}
