// SPDX-License-Identifier: Apache-2.0
#pragma once
// Training contract scheduled by the engine, plus built-in SGD learners.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sm2/dataio.hpp"
#include "sm2/rng.hpp"
#include "sm2/types.hpp"

namespace sm2 {

// Opaque serialized trainer state (parameters, optimizer state, RNG state,
// step counter) behind a versioned header.
struct TrainerSnapshot {
  std::vector<std::uint8_t> bytes;

  // 16 hex digits of FNV-1a over the bytes.
  std::string digest() const;

  friend bool operator==(const TrainerSnapshot&, const TrainerSnapshot&) = default;
};

struct Evaluation {
  double performance = 0.0;
  Polarity polarity = Polarity::HigherIsBetter;
};

// A trainer is a single-activity object: one of train/evaluate/snapshot at a time.
//
// train_batches takes one step per batch. `lrs` is either a single rate used
// for every batch or one rate per batch; every rate must be > 0. It returns
// the pre-step loss of each batch and throws DivergenceError as soon as a loss
// is not finite (steps before it are kept).
//
// evaluate never changes state. restore(snapshot()) followed by identical
// inputs reproduces parameters and losses bit for bit.
class Trainer {
 public:
  virtual ~Trainer() = default;

  virtual std::vector<double> train_batches(std::span<const Batch> batches,
                                            std::span<const double> lrs) = 0;
  virtual Evaluation evaluate(const Batch& eval_set) const = 0;
  virtual TrainerSnapshot snapshot() const = 0;
  virtual void restore(const TrainerSnapshot& snap) = 0;
  virtual void reseed(std::uint64_t seed) = 0;
  virtual std::unique_ptr<Trainer> clone() const = 0;
};

enum class LearnerKind : std::uint8_t { LinearRegression = 1, LogisticClassifier = 2, TinyMLP = 3 };

std::string_view to_string(LearnerKind k) noexcept;
LearnerKind learner_kind_from_string(std::string_view s);

struct BuiltinLearnerSpec {
  LearnerKind kind = LearnerKind::LinearRegression;
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;  // targets for regression, classes for the classifier
  std::vector<std::size_t> hidden_dims{16};  // TinyMLP only
  double init_scale = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Plain SGD over a flat parameter vector. Subclasses supply the loss, its
// analytic gradient, and the evaluation metric.
class ParametricLearner : public Trainer {
 public:
  explicit ParametricLearner(BuiltinLearnerSpec spec);

  std::vector<double> train_batches(std::span<const Batch> batches,
                                    std::span<const double> lrs) override;
  TrainerSnapshot snapshot() const override;
  void restore(const TrainerSnapshot& snap) override;
  // Resets the generator to `seed`, redraws the initial parameters and
  // zeroes the step counter.
  void reseed(std::uint64_t seed) override;

  // Mean loss of `batch` at `params`; writes the gradient when `grad` is set.
  virtual double loss_and_gradient(const Eigen::VectorXd& params, const Batch& batch,
                                   Eigen::VectorXd* grad) const = 0;
  virtual std::size_t parameter_count() const = 0;

  const BuiltinLearnerSpec& spec() const noexcept { return spec_; }
  const Eigen::VectorXd& parameters() const noexcept { return params_; }
  void set_parameters(const Eigen::VectorXd& p);
  std::uint64_t step_count() const noexcept { return step_; }

 protected:
  // Called by subclass constructors once parameter_count() is valid.
  void initialize();
  virtual void draw_initial(Eigen::VectorXd& params, Rng& rng) const;

  BuiltinLearnerSpec spec_;
  Eigen::VectorXd params_;
  Rng rng_;
  std::uint64_t step_ = 0;
};

// Least squares: loss = 1/(2B) sum ||W x + b - y||^2; evaluates R^2.
class LinearRegressionLearner final : public ParametricLearner {
 public:
  explicit LinearRegressionLearner(BuiltinLearnerSpec spec);

  double loss_and_gradient(const Eigen::VectorXd& params, const Batch& batch,
                           Eigen::VectorXd* grad) const override;
  std::size_t parameter_count() const override;
  Evaluation evaluate(const Batch& eval_set) const override;
  std::unique_ptr<Trainer> clone() const override;
};

// Softmax regression with mean cross-entropy; evaluates accuracy.
class LogisticClassifier final : public ParametricLearner {
 public:
  explicit LogisticClassifier(BuiltinLearnerSpec spec);

  double loss_and_gradient(const Eigen::VectorXd& params, const Batch& batch,
                           Eigen::VectorXd* grad) const override;
  std::size_t parameter_count() const override;
  Evaluation evaluate(const Batch& eval_set) const override;
  std::unique_ptr<Trainer> clone() const override;
};

// tanh hidden layers, linear output, squared error; evaluates MSE (lower is better).
class TinyMlp final : public ParametricLearner {
 public:
  explicit TinyMlp(BuiltinLearnerSpec spec);

  double loss_and_gradient(const Eigen::VectorXd& params, const Batch& batch,
                           Eigen::VectorXd* grad) const override;
  std::size_t parameter_count() const override;
  Evaluation evaluate(const Batch& eval_set) const override;
  std::unique_ptr<Trainer> clone() const override;

 protected:
  void draw_initial(Eigen::VectorXd& params, Rng& rng) const override;

 private:
  std::vector<std::size_t> layer_sizes() const;
  Eigen::MatrixXd forward(const Eigen::VectorXd& params, const Eigen::MatrixXd& x) const;
};

std::unique_ptr<ParametricLearner> make_learner(const BuiltinLearnerSpec& spec);

}  // namespace sm2
