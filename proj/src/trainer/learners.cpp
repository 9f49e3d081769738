// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>

#include "sm2/errors.hpp"
#include "sm2/trainer.hpp"

namespace sm2 {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'M', '2', 'S', 'N', 'A', 'P', '\0'};
constexpr std::uint32_t kSnapshotVersion = 1;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    le(bits);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes_(b), end_(end) {}
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw SnapshotError("snapshot is truncated");
  }
  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double f64() {
    const auto bits = le<std::uint64_t>();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  bool done() const noexcept { return pos_ == end_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint64_t checksum(const std::vector<std::uint8_t>& b, std::size_t n) {
  return fnv1a(b.data(), n);
}

void check_batch(const Batch& batch, std::size_t in, std::size_t out_cols) {
  if (batch.size() == 0) throw ArgumentError("empty batch");
  if (static_cast<std::size_t>(batch.inputs.cols()) != in)
    throw ArgumentError("batch has " + std::to_string(batch.inputs.cols()) +
                        " input columns, learner expects " + std::to_string(in));
  if (static_cast<std::size_t>(batch.targets.cols()) != out_cols ||
      batch.targets.rows() != batch.inputs.rows())
    throw ArgumentError("batch targets have the wrong shape");
}

}  // namespace

std::string TrainerSnapshot::digest() const {
  static constexpr char hex[] = "0123456789abcdef";
  std::uint64_t h = fnv1a(bytes.data(), bytes.size());
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = hex[h & 0xF];
  return s;
}

std::string_view to_string(LearnerKind k) noexcept {
  switch (k) {
    case LearnerKind::LinearRegression: return "linear";
    case LearnerKind::LogisticClassifier: return "logistic";
    case LearnerKind::TinyMLP: return "tiny_mlp";
  }
  return "unknown";
}

LearnerKind learner_kind_from_string(std::string_view s) {
  if (s == "linear") return LearnerKind::LinearRegression;
  if (s == "logistic") return LearnerKind::LogisticClassifier;
  if (s == "tiny_mlp") return LearnerKind::TinyMLP;
  throw ArgumentError("unknown learner kind '" + std::string(s) + "'");
}

void BuiltinLearnerSpec::validate() const {
  if (input_dim == 0) throw ConfigError("trainer.input_dim", "must be >= 1");
  if (output_dim == 0) throw ConfigError("trainer.output_dim", "must be >= 1");
  if (kind == LearnerKind::LogisticClassifier && output_dim < 2)
    throw ConfigError("trainer.output_dim", "a classifier needs at least 2 classes");
  if (kind == LearnerKind::TinyMLP) {
    if (hidden_dims.empty()) throw ConfigError("trainer.hidden_dims", "needs at least one layer");
    for (auto h : hidden_dims)
      if (h == 0) throw ConfigError("trainer.hidden_dims", "layer widths must be >= 1");
  }
  if (!(init_scale > 0.0) || !std::isfinite(init_scale))
    throw ConfigError("trainer.init_scale", "must be a finite value > 0");
}

// ---------------------------------------------------------------------------

ParametricLearner::ParametricLearner(BuiltinLearnerSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
  spec_.validate();
}

void ParametricLearner::initialize() {
  rng_ = Rng(spec_.seed);
  params_.resize(static_cast<Eigen::Index>(parameter_count()));
  draw_initial(params_, rng_);
  step_ = 0;
}

void ParametricLearner::draw_initial(Eigen::VectorXd& params, Rng& rng) const {
  // Weights first, then biases (zero).
  const auto n_w = static_cast<Eigen::Index>(spec_.input_dim * spec_.output_dim);
  params.setZero();
  for (Eigen::Index i = 0; i < n_w; ++i) params[i] = spec_.init_scale * rng.normal();
}

void ParametricLearner::reseed(std::uint64_t seed) {
  spec_.seed = seed;
  initialize();
}

void ParametricLearner::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != params_.size())
    throw ArgumentError("expected " + std::to_string(params_.size()) + " parameters, got " +
                        std::to_string(p.size()));
  params_ = p;
}

std::vector<double> ParametricLearner::train_batches(std::span<const Batch> batches,
                                                     std::span<const double> lrs) {
  if (lrs.size() != 1 && lrs.size() != batches.size())
    throw ArgumentError("need one learning rate or one per batch");
  for (double lr : lrs)
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("learning rates must be finite and > 0");

  std::vector<double> losses;
  losses.reserve(batches.size());
  Eigen::VectorXd grad(params_.size());
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const double lr = lrs.size() == 1 ? lrs[0] : lrs[i];
    const double loss = loss_and_gradient(params_, batches[i], &grad);
    if (!std::isfinite(loss)) throw DivergenceError(i, loss);
    params_.noalias() -= lr * grad;
    ++step_;
    losses.push_back(loss);
  }
  return losses;
}

TrainerSnapshot ParametricLearner::snapshot() const {
  Writer w;
  w.raw(kMagic.data(), kMagic.size());
  w.le<std::uint32_t>(kSnapshotVersion);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(spec_.kind));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(spec_.input_dim));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(spec_.output_dim));
  const bool mlp = spec_.kind == LearnerKind::TinyMLP;
  w.le<std::uint32_t>(mlp ? static_cast<std::uint32_t>(spec_.hidden_dims.size()) : 0U);
  if (mlp)
    for (auto h : spec_.hidden_dims) w.le<std::uint32_t>(static_cast<std::uint32_t>(h));
  w.le<std::uint64_t>(step_);
  w.le<std::uint64_t>(rng_.state());
  w.le<std::uint64_t>(static_cast<std::uint64_t>(params_.size()));
  for (Eigen::Index i = 0; i < params_.size(); ++i) w.f64(params_[i]);
  w.le<std::uint64_t>(checksum(w.out, w.out.size()));
  return TrainerSnapshot{std::move(w.out)};
}

void ParametricLearner::restore(const TrainerSnapshot& snap) {
  const auto& b = snap.bytes;
  if (b.size() < kMagic.size() + 8) throw SnapshotError("snapshot is truncated");
  if (!std::equal(kMagic.begin(), kMagic.end(), b.begin()))
    throw SnapshotError("not a trainer snapshot (bad magic)");
  const std::size_t body = b.size() - 8;
  std::uint64_t stored = 0;
  for (std::size_t i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(b[body + i]) << (8 * i);
  if (stored != checksum(b, body)) throw SnapshotError("snapshot checksum mismatch");
  Reader r(b, body);
  for (std::size_t i = 0; i < kMagic.size(); ++i) r.le<std::uint8_t>();
  const auto version = r.le<std::uint32_t>();
  if (version != kSnapshotVersion)
    throw SnapshotError("unsupported snapshot version " + std::to_string(version));
  const auto kind = r.le<std::uint8_t>();
  if (kind != static_cast<std::uint8_t>(spec_.kind))
    throw SnapshotError("snapshot was taken from a different learner kind");
  const auto in = r.le<std::uint32_t>();
  const auto out = r.le<std::uint32_t>();
  const auto n_hidden = r.le<std::uint32_t>();
  std::vector<std::size_t> hidden;
  for (std::uint32_t i = 0; i < n_hidden; ++i) hidden.push_back(r.le<std::uint32_t>());
  const bool mlp = spec_.kind == LearnerKind::TinyMLP;
  if (in != spec_.input_dim || out != spec_.output_dim || (mlp && hidden != spec_.hidden_dims) ||
      (!mlp && n_hidden != 0))
    throw SnapshotError("snapshot architecture does not match this learner");
  const auto step = r.le<std::uint64_t>();
  const auto rng_state = r.le<std::uint64_t>();
  const auto n_params = r.le<std::uint64_t>();
  if (n_params != static_cast<std::uint64_t>(params_.size()))
    throw SnapshotError("snapshot parameter count does not match this learner");
  Eigen::VectorXd p(params_.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = r.f64();
  if (!r.done()) throw SnapshotError("trailing bytes in snapshot");
  params_ = std::move(p);
  step_ = step;
  rng_.set_state(rng_state);
}

// ---------------------------------------------------------------------------

LinearRegressionLearner::LinearRegressionLearner(BuiltinLearnerSpec spec)
    : ParametricLearner(std::move(spec)) {
  initialize();
}

std::size_t LinearRegressionLearner::parameter_count() const {
  return spec_.output_dim * spec_.input_dim + spec_.output_dim;
}

double LinearRegressionLearner::loss_and_gradient(const Eigen::VectorXd& params, const Batch& batch,
                                                  Eigen::VectorXd* grad) const {
  const auto d = static_cast<Eigen::Index>(spec_.input_dim);
  const auto m = static_cast<Eigen::Index>(spec_.output_dim);
  check_batch(batch, spec_.input_dim, spec_.output_dim);
  const ConstRowMap W(params.data(), m, d);
  const auto b = params.segment(m * d, m);
  const double n = static_cast<double>(batch.size());

  const Eigen::MatrixXd resid = ((batch.inputs * W.transpose()).rowwise() + b.transpose()) - batch.targets;
  if (grad) {
    grad->resize(params.size());
    RowMap gW(grad->data(), m, d);
    gW = resid.transpose() * batch.inputs / n;
    grad->segment(m * d, m) = resid.colwise().sum().transpose() / n;
  }
  return 0.5 * resid.squaredNorm() / n;
}

Evaluation LinearRegressionLearner::evaluate(const Batch& eval_set) const {
  const auto d = static_cast<Eigen::Index>(spec_.input_dim);
  const auto m = static_cast<Eigen::Index>(spec_.output_dim);
  check_batch(eval_set, spec_.input_dim, spec_.output_dim);
  const ConstRowMap W(params_.data(), m, d);
  const auto b = params_.segment(m * d, m);
  const Eigen::MatrixXd pred = (eval_set.inputs * W.transpose()).rowwise() + b.transpose();
  const double ss_res = (pred - eval_set.targets).squaredNorm();
  const Eigen::RowVectorXd mean = eval_set.targets.colwise().mean();
  const double ss_tot = (eval_set.targets.rowwise() - mean).squaredNorm();
  Evaluation e;
  e.polarity = Polarity::HigherIsBetter;
  e.performance = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return e;
}

std::unique_ptr<Trainer> LinearRegressionLearner::clone() const {
  return std::make_unique<LinearRegressionLearner>(*this);
}

// ---------------------------------------------------------------------------

LogisticClassifier::LogisticClassifier(BuiltinLearnerSpec spec) : ParametricLearner(std::move(spec)) {
  initialize();
}

std::size_t LogisticClassifier::parameter_count() const {
  return spec_.output_dim * spec_.input_dim + spec_.output_dim;
}

double LogisticClassifier::loss_and_gradient(const Eigen::VectorXd& params, const Batch& batch,
                                             Eigen::VectorXd* grad) const {
  const auto d = static_cast<Eigen::Index>(spec_.input_dim);
  const auto c = static_cast<Eigen::Index>(spec_.output_dim);
  check_batch(batch, spec_.input_dim, 1);
  const ConstRowMap W(params.data(), c, d);
  const auto b = params.segment(c * d, c);
  const Eigen::Index n = batch.inputs.rows();

  Eigen::MatrixXd z = (batch.inputs * W.transpose()).rowwise() + b.transpose();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double label = batch.targets(i, 0);
    const auto y = static_cast<Eigen::Index>(label);
    if (y < 0 || y >= c || static_cast<double>(y) != label)
      throw ArgumentError("class label out of range: " + std::to_string(label));
    const double zmax = z.row(i).maxCoeff();
    z.row(i).array() -= zmax;
    const double lse = std::log(z.row(i).array().exp().sum());
    loss += lse - z(i, y);
    if (grad) {
      z.row(i) = (z.row(i).array() - lse).exp().matrix();  // softmax
      z(i, y) -= 1.0;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad) {
    grad->resize(params.size());
    RowMap gW(grad->data(), c, d);
    gW = z.transpose() * batch.inputs * inv_n;
    grad->segment(c * d, c) = z.colwise().sum().transpose() * inv_n;
  }
  return loss * inv_n;
}

Evaluation LogisticClassifier::evaluate(const Batch& eval_set) const {
  const auto d = static_cast<Eigen::Index>(spec_.input_dim);
  const auto c = static_cast<Eigen::Index>(spec_.output_dim);
  check_batch(eval_set, spec_.input_dim, 1);
  const ConstRowMap W(params_.data(), c, d);
  const auto b = params_.segment(c * d, c);
  const Eigen::MatrixXd z = (eval_set.inputs * W.transpose()).rowwise() + b.transpose();
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    z.row(i).maxCoeff(&best);  // first maximum on ties
    if (static_cast<double>(best) == eval_set.targets(i, 0)) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(z.rows()), Polarity::HigherIsBetter};
}

std::unique_ptr<Trainer> LogisticClassifier::clone() const {
  return std::make_unique<LogisticClassifier>(*this);
}

// ---------------------------------------------------------------------------

TinyMlp::TinyMlp(BuiltinLearnerSpec spec) : ParametricLearner(std::move(spec)) { initialize(); }

std::vector<std::size_t> TinyMlp::layer_sizes() const {
  std::vector<std::size_t> s{spec_.input_dim};
  s.insert(s.end(), spec_.hidden_dims.begin(), spec_.hidden_dims.end());
  s.push_back(spec_.output_dim);
  return s;
}

std::size_t TinyMlp::parameter_count() const {
  const auto s = layer_sizes();
  std::size_t n = 0;
  for (std::size_t l = 1; l < s.size(); ++l) n += s[l] * s[l - 1] + s[l];
  return n;
}

void TinyMlp::draw_initial(Eigen::VectorXd& params, Rng& rng) const {
  const auto s = layer_sizes();
  params.setZero();
  Eigen::Index off = 0;
  for (std::size_t l = 1; l < s.size(); ++l) {
    const auto n_w = static_cast<Eigen::Index>(s[l] * s[l - 1]);
    for (Eigen::Index i = 0; i < n_w; ++i) params[off + i] = spec_.init_scale * rng.normal();
    off += n_w + static_cast<Eigen::Index>(s[l]);
  }
}

Eigen::MatrixXd TinyMlp::forward(const Eigen::VectorXd& params, const Eigen::MatrixXd& x) const {
  const auto s = layer_sizes();
  Eigen::MatrixXd a = x;
  Eigen::Index off = 0;
  for (std::size_t l = 1; l < s.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(s[l]);
    const auto in = static_cast<Eigen::Index>(s[l - 1]);
    const ConstRowMap W(params.data() + off, out, in);
    const auto b = params.segment(off + out * in, out);
    Eigen::MatrixXd z = (a * W.transpose()).rowwise() + b.transpose();
    a = l + 1 < s.size() ? Eigen::MatrixXd(z.array().tanh()) : std::move(z);
    off += out * in + out;
  }
  return a;
}

double TinyMlp::loss_and_gradient(const Eigen::VectorXd& params, const Batch& batch,
                                  Eigen::VectorXd* grad) const {
  check_batch(batch, spec_.input_dim, spec_.output_dim);
  const auto s = layer_sizes();
  const std::size_t L = s.size() - 1;
  const double n = static_cast<double>(batch.size());

  std::vector<Eigen::MatrixXd> acts{batch.inputs};
  std::vector<Eigen::Index> offs;
  Eigen::Index off = 0;
  for (std::size_t l = 1; l <= L; ++l) {
    const auto out = static_cast<Eigen::Index>(s[l]);
    const auto in = static_cast<Eigen::Index>(s[l - 1]);
    offs.push_back(off);
    const ConstRowMap W(params.data() + off, out, in);
    const auto b = params.segment(off + out * in, out);
    Eigen::MatrixXd z = (acts.back() * W.transpose()).rowwise() + b.transpose();
    acts.push_back(l < L ? Eigen::MatrixXd(z.array().tanh()) : std::move(z));
    off += out * in + out;
  }
  Eigen::MatrixXd delta = acts.back() - batch.targets;
  const double loss = 0.5 * delta.squaredNorm() / n;
  if (!grad) return loss;

  grad->resize(params.size());
  delta /= n;
  for (std::size_t l = L; l >= 1; --l) {
    const auto out = static_cast<Eigen::Index>(s[l]);
    const auto in = static_cast<Eigen::Index>(s[l - 1]);
    const Eigen::Index o = offs[l - 1];
    RowMap gW(grad->data() + o, out, in);
    gW = delta.transpose() * acts[l - 1];
    grad->segment(o + out * in, out) = delta.colwise().sum().transpose();
    if (l > 1) {
      const ConstRowMap W(params.data() + o, out, in);
      delta = ((delta * W).array() * (1.0 - acts[l - 1].array().square())).matrix();
    }
  }
  return loss;
}

Evaluation TinyMlp::evaluate(const Batch& eval_set) const {
  check_batch(eval_set, spec_.input_dim, spec_.output_dim);
  const Eigen::MatrixXd pred = forward(params_, eval_set.inputs);
  const double mse = (pred - eval_set.targets).squaredNorm() /
                     static_cast<double>(eval_set.targets.size());
  return {mse, Polarity::LowerIsBetter};
}

std::unique_ptr<Trainer> TinyMlp::clone() const { return std::make_unique<TinyMlp>(*this); }

// ---------------------------------------------------------------------------

std::unique_ptr<ParametricLearner> make_learner(const BuiltinLearnerSpec& spec) {
  switch (spec.kind) {
    case LearnerKind::LinearRegression: return std::make_unique<LinearRegressionLearner>(spec);
    case LearnerKind::LogisticClassifier: return std::make_unique<LogisticClassifier>(spec);
    case LearnerKind::TinyMLP: return std::make_unique<TinyMlp>(spec);
  }
  throw ArgumentError("unknown learner kind");
}

}  // namespace sm2
