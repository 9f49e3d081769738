// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <vector>

#include "sm2/errors.hpp"
#include "sm2/trainer.hpp"
#include "support.hpp"

using namespace sm2;
using sm2::testing::gradient_error;
using sm2::testing::random_batch;
using sm2::testing::spec_for;

namespace {

const LearnerKind kAll[] = {LearnerKind::LinearRegression, LearnerKind::LogisticClassifier,
                            LearnerKind::TinyMLP};

}  // namespace

TEST_CASE("analytic gradients match central differences") {
  Rng rng(99);
  for (LearnerKind kind : kAll) {
    auto learner = make_learner(spec_for(kind));
    const Batch batch = random_batch(kind, 13, rng);
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd p(static_cast<Eigen::Index>(learner->parameter_count()));
      for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = 0.5 * rng.normal();
      INFO(to_string(kind) << " point " << k);
      CHECK(gradient_error(*learner, p, batch) < 1e-5);
    }
  }
}

TEST_CASE("linear regression converges on exactly linear data") {
  const Dataset d = generate_synthetic(LinearRegressionSpec{4000, 4, 0.0}, 8, 0.1);
  BuiltinLearnerSpec spec;
  spec.input_dim = 4;
  auto learner = make_learner(spec);
  const std::vector<std::size_t> cands{32};
  MicroBatchStore store(d, cands);
  const auto batches = collect_batches(store, 32, store.all_micro());
  const std::vector<double> lr{0.1};
  std::vector<double> losses;
  for (int epoch = 0; epoch < 30; ++epoch) losses = learner->train_batches(batches, lr);
  CHECK(losses.back() < 1e-6);
  CHECK(learner->evaluate(d.holdout_batch()).performance == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("learning rates must be positive") {
  auto learner = make_learner(spec_for(LearnerKind::LinearRegression));
  Rng rng(1);
  const std::vector<Batch> b{random_batch(LearnerKind::LinearRegression, 4, rng),
                             random_batch(LearnerKind::LinearRegression, 4, rng)};
  CHECK_THROWS_AS(learner->train_batches(b, std::vector<double>{0.0, 0.0}), ArgumentError);
  CHECK_THROWS_AS(learner->train_batches(b, std::vector<double>{-1.0}), ArgumentError);
  CHECK_THROWS_AS(learner->train_batches(b, std::vector<double>{0.1, 0.1, 0.1}), ArgumentError);
  CHECK(learner->step_count() == 0);
}

TEST_CASE("restore reproduces losses and evaluation bit for bit") {
  Rng rng(4);
  for (LearnerKind kind : kAll) {
    auto learner = make_learner(spec_for(kind));
    std::vector<Batch> batches;
    for (int i = 0; i < 5; ++i) batches.push_back(random_batch(kind, 8, rng));
    const Batch eval = random_batch(kind, 50, rng);
    const auto snap = learner->snapshot();
    const double before = learner->evaluate(eval).performance;
    const auto a = learner->train_batches(batches, std::vector<double>{0.05});
    for (int i = 0; i < 20; ++i) learner->train_batches(batches, std::vector<double>{0.05});
    learner->restore(snap);
    CHECK(learner->evaluate(eval).performance == before);
    CHECK(learner->train_batches(batches, std::vector<double>{0.05}) == a);
  }
}

TEST_CASE("snapshots are stable across identical runs") {
  Rng r1(5), r2(5);
  for (LearnerKind kind : kAll) {
    auto a = make_learner(spec_for(kind, 17));
    auto b = make_learner(spec_for(kind, 17));
    const Batch ba = random_batch(kind, 16, r1);
    const Batch bb = random_batch(kind, 16, r2);
    a->train_batches({&ba, 1}, std::vector<double>{0.01});
    b->train_batches({&bb, 1}, std::vector<double>{0.01});
    CHECK(a->snapshot() == b->snapshot());
    CHECK(a->snapshot().digest() == b->snapshot().digest());
    CHECK(a->snapshot().digest().size() == 16);
  }
}

TEST_CASE("restoring a foreign or damaged snapshot fails") {
  auto lin = make_learner(spec_for(LearnerKind::LinearRegression));
  auto logit = make_learner(spec_for(LearnerKind::LogisticClassifier));
  CHECK_THROWS_AS(lin->restore(logit->snapshot()), SnapshotError);

  auto snap = lin->snapshot();
  snap.bytes[snap.bytes.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(lin->restore(snap), SnapshotError);
  snap = lin->snapshot();
  snap.bytes.resize(snap.bytes.size() - 3);
  CHECK_THROWS_AS(lin->restore(snap), SnapshotError);
  CHECK_THROWS_AS(lin->restore(TrainerSnapshot{}), SnapshotError);

  auto wide = spec_for(LearnerKind::TinyMLP);
  auto narrow = wide;
  narrow.hidden_dims = {3};
  CHECK_THROWS_AS(make_learner(narrow)->restore(make_learner(wide)->snapshot()), SnapshotError);
}

TEST_CASE("majority-class classifier scores the majority share") {
  BuiltinLearnerSpec spec;
  spec.kind = LearnerKind::LogisticClassifier;
  spec.input_dim = 2;
  spec.output_dim = 2;
  auto learner = make_learner(spec);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
  p[4] = 5.0;  // bias of class 0
  learner->set_parameters(p);
  Batch b;
  b.inputs = Eigen::MatrixXd::Random(10, 2);
  b.targets = Eigen::MatrixXd::Zero(10, 1);
  for (int i = 7; i < 10; ++i) b.targets(i, 0) = 1.0;
  const auto e = learner->evaluate(b);
  CHECK(e.performance == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(e.polarity == Polarity::HigherIsBetter);
}

TEST_CASE("true generating function gives R2 of one") {
  BuiltinLearnerSpec spec;
  spec.input_dim = 3;
  auto learner = make_learner(spec);
  Eigen::VectorXd p(4);
  p << 1.0, -2.0, 0.5, 0.25;
  learner->set_parameters(p);
  Batch b;
  b.inputs = Eigen::MatrixXd::Random(40, 3);
  b.targets = (b.inputs * p.head(3)).array() + 0.25;
  CHECK(learner->evaluate(b).performance == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("training the MLP lowers its error") {
  const Dataset d = generate_synthetic(LinearRegressionSpec{3000, 4, 0.1}, 2, 0.2);
  BuiltinLearnerSpec spec;
  spec.kind = LearnerKind::TinyMLP;
  spec.input_dim = 4;
  auto learner = make_learner(spec);
  const double untrained = learner->evaluate(d.holdout_batch()).performance;
  const std::vector<std::size_t> cands{16};
  MicroBatchStore store(d, cands);
  const auto batches = collect_batches(store, 16, store.all_micro());
  for (int e = 0; e < 5; ++e) learner->train_batches(batches, std::vector<double>{0.02});
  const auto trained = learner->evaluate(d.holdout_batch());
  CHECK(trained.polarity == Polarity::LowerIsBetter);
  CHECK(trained.performance <= untrained);
}

TEST_CASE("non-finite loss raises DivergenceError and keeps earlier steps") {
  auto learner = make_learner(spec_for(LearnerKind::LinearRegression));
  Rng rng(3);
  std::vector<Batch> b{random_batch(LearnerKind::LinearRegression, 4, rng),
                       random_batch(LearnerKind::LinearRegression, 4, rng)};
  b[1].inputs(0, 0) = NAN;
  try {
    learner->train_batches(b, std::vector<double>{0.1});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.batch_index() == 1);
  }
  CHECK(learner->step_count() == 1);
}

TEST_CASE("reseed redraws the initial state") {
  auto a = make_learner(spec_for(LearnerKind::TinyMLP, 1));
  auto b = make_learner(spec_for(LearnerKind::TinyMLP, 2));
  CHECK(a->snapshot() != b->snapshot());
  b->reseed(1);
  CHECK(a->snapshot() == b->snapshot());
  CHECK(learner_kind_from_string("tiny_mlp") == LearnerKind::TinyMLP);
  CHECK_THROWS_AS(learner_kind_from_string("cnn"), ArgumentError);
}
