// SPDX-License-Identifier: Apache-2.0
#pragma once
// Fixtures shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>

#include "oracles.hpp"
#include "sm2/dataio.hpp"
#include "sm2/energy.hpp"
#include "sm2/errors.hpp"
#include "sm2/ledger.hpp"
#include "sm2/scheduler.hpp"
#include "sm2/trainer.hpp"

namespace sm2::testing {

// Trainer whose loss is constant and whose held-out performance is a fixed
// number per batch size, so every config selects the same LR and halving is
// decided by P and E alone.
class RigTrainer final : public Trainer {
 public:
  explicit RigTrainer(double performance) : performance_(performance) {}

  std::vector<double> train_batches(std::span<const Batch> batches, std::span<const double> lrs) override {
    if (lrs.size() != 1 && lrs.size() != batches.size()) throw ArgumentError("lr count");
    steps_ += batches.size();
    return std::vector<double>(batches.size(), 1.0);
  }
  Evaluation evaluate(const Batch&) const override { return {performance_, Polarity::HigherIsBetter}; }
  TrainerSnapshot snapshot() const override {
    TrainerSnapshot s;
    s.bytes.resize(sizeof steps_);
    std::memcpy(s.bytes.data(), &steps_, sizeof steps_);
    return s;
  }
  void restore(const TrainerSnapshot& s) override {
    if (s.bytes.size() != sizeof steps_) throw SnapshotError("rig snapshot size");
    std::memcpy(&steps_, s.bytes.data(), sizeof steps_);
  }
  void reseed(std::uint64_t) override { steps_ = 0; }
  std::unique_ptr<Trainer> clone() const override { return std::make_unique<RigTrainer>(*this); }

 private:
  double performance_;
  std::uint64_t steps_ = 0;
};

struct RigRun {
  RunResult result;
  RunLedger ledger;
};

// Rig over the default candidates. The training split must give batch 1024
// at least 20 exploration batches: 0.25 * 82800 / 1024 = 20.2.
inline const Dataset& rig_dataset() {
  static const Dataset d = generate_synthetic(LinearRegressionSpec{92000, 1, 0.0}, 11, 0.1);
  return d;
}

inline RigRun run_rig(double alpha) {
  const std::vector<std::size_t> cands{8, 16, 32, 64, 128, 256, 512, 1024};
  std::map<std::size_t, double> perf;
  for (std::size_t i = 0; i < cands.size(); ++i) perf[cands[i]] = oracle::kRigPerformance[i];
  MicroBatchStore store(rig_dataset(), cands);
  SimPowerModel pm;
  pm.noise_rel = 0.0;
  SimulatedPowerMonitor monitor(pm);
  RigRun out;
  SchedulerOptions opts;
  opts.weights.alpha = alpha;
  opts.fingerprint = "rig";
  Sm2Scheduler s(opts, rig_dataset(), store, monitor, out.ledger,
                 [&](const HyperConfig& c) { return std::make_unique<RigTrainer>(perf.at(c.batch_size())); });
  out.result = s.run();
  return out;
}

inline std::vector<std::vector<std::uint32_t>> halving_drops(const RunLedger& ledger) {
  std::vector<std::vector<std::uint32_t>> out;
  for (const auto& ev : ledger.events())
    if (const auto* h = std::get_if<HalvingDecision>(&ev)) {
      out.emplace_back();
      for (ConfigId id : h->dropped) out.back().push_back(id.value);
    }
  return out;
}

// Number of live configs at each halving decision.
inline std::vector<std::size_t> survivor_counts(const RunLedger& ledger) {
  std::vector<std::size_t> out;
  for (const auto& ev : ledger.events())
    if (const auto* h = std::get_if<HalvingDecision>(&ev)) {
      if (out.empty()) out.push_back(h->entries.size());
      out.push_back(h->entries.size() - h->dropped.size());
    }
  return out;
}

}  // namespace sm2::testing

namespace sm2::testing {

// Relative error ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||)
// with central differences around `params`.
inline double gradient_error(const ParametricLearner& learner, const Eigen::VectorXd& params,
                             const Batch& batch) {
  Eigen::VectorXd g;
  learner.loss_and_gradient(params, batch, &g);
  Eigen::VectorXd num(params.size());
  Eigen::VectorXd p = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(params[i]));
    p[i] = params[i] + h;
    const double up = learner.loss_and_gradient(p, batch, nullptr);
    p[i] = params[i] - h;
    const double down = learner.loss_and_gradient(p, batch, nullptr);
    p[i] = params[i];
    num[i] = (up - down) / (2.0 * h);
  }
  const double scale = std::max({g.norm(), num.norm(), 1e-300});
  return (g - num).norm() / scale;
}

inline BuiltinLearnerSpec spec_for(LearnerKind kind, std::uint64_t seed = 1) {
  BuiltinLearnerSpec s;
  s.kind = kind;
  s.input_dim = 5;
  s.output_dim = kind == LearnerKind::LogisticClassifier ? 3 : 2;
  s.hidden_dims = {7, 4};
  s.seed = seed;
  return s;
}

// Random batch matching spec_for(kind).
inline Batch random_batch(LearnerKind kind, std::size_t n, Rng& rng) {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(n), 5);
  for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = rng.normal();
  if (kind == LearnerKind::LogisticClassifier) {
    b.targets.resize(static_cast<Eigen::Index>(n), 1);
    for (Eigen::Index i = 0; i < b.targets.rows(); ++i) b.targets(i, 0) = static_cast<double>(rng.next() % 3);
  } else {
    b.targets.resize(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < b.targets.size(); ++i) b.targets.data()[i] = rng.normal();
  }
  return b;
}

}  // namespace sm2::testing
