// SPDX-License-Identifier: Apache-2.0
#include "sm2/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "sm2/errors.hpp"
#include "sm2/rng.hpp"

namespace sm2 {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void shuffle_in_place(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

Dataset make_linear(const LinearRegressionSpec& s, Rng& rng) {
  if (s.n == 0 || s.dim == 0) throw ArgumentError("linear regression needs n >= 1 and dim >= 1");
  if (!(s.noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be >= 0");
  Dataset d;
  d.task = TaskKind::Regression;
  d.inputs.resize(static_cast<Eigen::Index>(s.n), static_cast<Eigen::Index>(s.dim));
  d.targets.resize(static_cast<Eigen::Index>(s.n), 1);
  Eigen::VectorXd w(static_cast<Eigen::Index>(s.dim));
  for (auto& x : w) x = rng.normal() / std::sqrt(static_cast<double>(s.dim));
  const double bias = 0.5;
  for (Eigen::Index i = 0; i < d.inputs.rows(); ++i) {
    for (Eigen::Index k = 0; k < d.inputs.cols(); ++k) d.inputs(i, k) = rng.normal();
    d.targets(i, 0) = d.inputs.row(i).dot(w) + bias + s.noise_sigma * rng.normal();
  }
  d.provenance = "synthetic:linear_regression";
  return d;
}

Dataset make_two_gaussians(const TwoGaussiansSpec& s, Rng& rng) {
  if (s.n < 2 || s.dim == 0) throw ArgumentError("two_gaussians needs n >= 2 and dim >= 1");
  if (!(s.separation >= 0.0)) throw ArgumentError("separation must be >= 0");
  Dataset d;
  d.task = TaskKind::Classification;
  d.num_classes = 2;
  d.inputs.resize(static_cast<Eigen::Index>(s.n), static_cast<Eigen::Index>(s.dim));
  d.targets.resize(static_cast<Eigen::Index>(s.n), 1);
  Eigen::VectorXd dir(static_cast<Eigen::Index>(s.dim));
  for (auto& x : dir) x = rng.normal();
  dir.normalize();
  for (Eigen::Index i = 0; i < d.inputs.rows(); ++i) {
    const int label = static_cast<int>(i % 2);
    const double offset = (label == 1 ? 0.5 : -0.5) * s.separation;
    for (Eigen::Index k = 0; k < d.inputs.cols(); ++k) d.inputs(i, k) = rng.normal() + offset * dir(k);
    d.targets(i, 0) = label;
  }
  d.provenance = "synthetic:two_gaussians";
  return d;
}

Dataset make_quadratic_bowl(const QuadraticBowlSpec& s, Rng& rng) {
  if (s.dim == 0) throw ArgumentError("quadratic_bowl needs dim >= 1");
  if (!(s.condition_number >= 1.0)) throw ArgumentError("condition_number must be >= 1");
  if (s.dim == 1 && s.condition_number != 1.0)
    throw ArgumentError("a one-dimensional bowl has condition number 1");
  if (!(s.lambda_max > 0.0)) throw ArgumentError("lambda_max must be > 0");
  const auto d = static_cast<Eigen::Index>(s.dim);
  const std::size_t group = 2 * s.dim;
  const std::size_t groups = s.n / group;
  if (groups == 0) throw ArgumentError("quadratic_bowl needs n >= 2 * dim");

  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < d; ++k) g(i, k) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();

  Eigen::VectorXd lambda(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double t = d == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    lambda(i) = s.lambda_max * std::pow(s.condition_number, t - 1.0);
  }
  Eigen::VectorXd w_star(d);
  for (auto& x : w_star) x = rng.normal();

  // One group: +/- sqrt(d * lambda_i) q_i for every i. Its mean is zero and
  // (1 / 2d) sum x x^T = Q diag(lambda) Q^T.
  Eigen::MatrixXd block(static_cast<Eigen::Index>(group), d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::VectorXd v = std::sqrt(static_cast<double>(d) * lambda(i)) * q.col(i);
    block.row(2 * i) = v.transpose();
    block.row(2 * i + 1) = -v.transpose();
  }
  Dataset out;
  out.task = TaskKind::Regression;
  out.group_size = group;
  out.inputs.resize(static_cast<Eigen::Index>(groups * group), d);
  for (std::size_t k = 0; k < groups; ++k) {
    out.inputs.middleRows(static_cast<Eigen::Index>(k * group), static_cast<Eigen::Index>(group)) =
        block;
  }
  out.targets = out.inputs * w_star;
  out.lambda_max = lambda.maxCoeff();
  out.provenance = "synthetic:quadratic_bowl";
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

}  // namespace

std::size_t Dataset::output_dim() const noexcept {
  return task == TaskKind::Classification ? num_classes : static_cast<std::size_t>(targets.cols());
}

void Dataset::split(double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ArgumentError("holdout fraction must be within (0, 1)");
  if (group_size == 0 || size() % group_size != 0)
    throw ArgumentError("dataset size must be a multiple of its group size");
  const std::size_t groups = size() / group_size;
  auto n_hold = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(groups)));
  n_hold = std::clamp<std::size_t>(n_hold, 1, groups > 1 ? groups - 1 : 1);
  if (groups < 2) throw ArgumentError("dataset too small to split");

  std::vector<std::size_t> order(groups);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix64(seed ^ 0x5851f42d4c957f2dULL));
  shuffle_in_place(order, rng);

  holdout.clear();
  train_order.clear();
  for (std::size_t k = 0; k < groups; ++k) {
    auto& dst = k < n_hold ? holdout : train_order;
    for (std::size_t r = 0; r < group_size; ++r) dst.push_back(order[k] * group_size + r);
  }
}

Batch Dataset::rows(std::span<const std::size_t> idx) const {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(idx.size()), inputs.cols());
  b.targets.resize(static_cast<Eigen::Index>(idx.size()), targets.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(idx[i]);
    b.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(r);
    b.targets.row(static_cast<Eigen::Index>(i)) = targets.row(r);
  }
  return b;
}

void Dataset::validate() const {
  if (size() == 0) throw ArgumentError("dataset is empty");
  if (targets.rows() != inputs.rows()) throw ArgumentError("inputs and targets differ in length");
  if (!inputs.allFinite() || !targets.allFinite()) throw ArgumentError("dataset contains NaN or Inf");
  if (task == TaskKind::Classification) {
    if (targets.cols() != 1) throw ArgumentError("classification needs exactly one label column");
    if (num_classes < 2) throw ArgumentError("classification needs at least two classes");
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      const double y = targets(i, 0);
      if (y < 0 || y >= static_cast<double>(num_classes) || y != std::floor(y))
        throw ArgumentError("class label out of range at row " + std::to_string(i));
    }
  }
  std::vector<char> seen(size(), 0);
  for (auto* split : {&train_order, &holdout}) {
    for (auto r : *split) {
      if (r >= size() || seen[r]) throw ArgumentError("train/holdout splits overlap or are out of range");
      seen[r] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw ArgumentError("train/holdout splits do not cover the dataset");
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed, double holdout_fraction) {
  Rng rng(mix64(seed));
  Dataset d = std::visit(overloaded{[&](const LinearRegressionSpec& s) { return make_linear(s, rng); },
                                    [&](const TwoGaussiansSpec& s) { return make_two_gaussians(s, rng); },
                                    [&](const QuadraticBowlSpec& s) { return make_quadratic_bowl(s, rng); }},
                         spec);
  d.split(holdout_fraction, seed);
  d.validate();
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, std::uint64_t seed,
                 double holdout_fraction) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  if (schema.target_columns.empty()) throw ArgumentError("at least one target column is required");
  if (schema.task == TaskKind::Classification && schema.target_columns.size() != 1)
    throw ArgumentError("classification takes exactly one target column");

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ParseError(1, "missing header row");
  const auto header = split_line(line, schema.delimiter);
  std::vector<int> role(header.size(), -1);  // -1 input, otherwise target index
  for (std::size_t t = 0; t < schema.target_columns.size(); ++t) {
    const auto it = std::find(header.begin(), header.end(), schema.target_columns[t]);
    if (it == header.end())
      throw ParseError(1, "target column '" + schema.target_columns[t] + "' not in header");
    role[static_cast<std::size_t>(it - header.begin())] = static_cast<int>(t);
  }
  const auto n_in = static_cast<Eigen::Index>(std::count(role.begin(), role.end(), -1));
  if (n_in == 0) throw ParseError(1, "no input columns");

  std::vector<std::vector<double>> xs, ys;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line, schema.delimiter);
    if (cells.size() != header.size()) {
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(cells.size()));
    }
    std::vector<double> x, y(schema.target_columns.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto& cell = cells[c];
      const auto* end = cell.data() + cell.size();
      const auto res = std::from_chars(cell.data(), end, v);
      if (cell.empty() || res.ec != std::errc{} || res.ptr != end) {
        throw TypedParseError(lineno, header[c], cell);
      }
      if (!std::isfinite(v)) throw TypedParseError(lineno, header[c], cell);
      if (role[c] < 0) x.push_back(v);
      else y[static_cast<std::size_t>(role[c])] = v;
    }
    xs.push_back(std::move(x));
    ys.push_back(std::move(y));
  }
  if (xs.empty()) throw ParseError(lineno, "no data rows");

  Dataset d;
  d.task = schema.task;
  const auto n = static_cast<Eigen::Index>(xs.size());
  d.inputs.resize(n, n_in);
  d.targets.resize(n, static_cast<Eigen::Index>(schema.target_columns.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n_in; ++k) d.inputs(i, k) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < d.targets.cols(); ++k)
      d.targets(i, k) = ys[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  if (d.task == TaskKind::Classification) {
    d.num_classes = static_cast<std::size_t>(d.targets.maxCoeff()) + 1;
  }
  d.provenance = "csv:" + path.string();
  d.split(holdout_fraction, seed);
  d.validate();
  return d;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index k = 0; k < data.inputs.cols(); ++k) out << (k ? std::string(1, delimiter) : "") << 'x' << k;
  for (Eigen::Index k = 0; k < data.targets.cols(); ++k) {
    out << delimiter;
    if (data.task == TaskKind::Classification) out << "label";
    else out << 'y' << k;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    for (Eigen::Index k = 0; k < data.inputs.cols(); ++k) out << (k ? std::string(1, delimiter) : "") << data.inputs(i, k);
    for (Eigen::Index k = 0; k < data.targets.cols(); ++k) out << delimiter << data.targets(i, k);
    out << '\n';
  }
}

MicroBatchStore::MicroBatchStore(const Dataset& data, std::span<const std::size_t> batch_candidates,
                                 std::size_t capacity)
    : data_(&data), candidates_(batch_candidates.begin(), batch_candidates.end()), capacity_(capacity) {
  if (candidates_.empty()) throw ConfigError("batch_candidates", "at least one batch size is required");
  micro_ = *std::min_element(candidates_.begin(), candidates_.end());
  if (micro_ == 0) throw ConfigError("batch_candidates", "batch sizes must be >= 1");
  for (auto b : candidates_) {
    if (b % micro_ != 0) {
      throw ConfigError("batch_candidates", "batch size " + std::to_string(b) +
                                                " is not a multiple of the smallest candidate " +
                                                std::to_string(micro_));
    }
  }
  if (micro_ % data.group_size != 0) {
    throw ConfigError("batch_candidates", "smallest batch size must be a multiple of the dataset group size " +
                                              std::to_string(data.group_size));
  }
  const std::size_t n_micro = data.train_order.size() / micro_;
  if (n_micro == 0) {
    throw ConfigError("batch_candidates", "training split (" + std::to_string(data.train_order.size()) +
                                              " samples) is smaller than the smallest batch size");
  }
  micro_rows_.reserve(n_micro);
  for (std::size_t m = 0; m < n_micro; ++m) {
    micro_rows_.emplace_back(data.train_order.begin() + static_cast<std::ptrdiff_t>(m * micro_),
                             data.train_order.begin() + static_cast<std::ptrdiff_t>((m + 1) * micro_));
  }
}

std::vector<std::size_t> MicroBatchStore::all_micro() const {
  std::vector<std::size_t> v(micro_count());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<std::size_t> MicroBatchStore::partition(double fraction) const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("partition fraction must be within (0, 1]");
  auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(micro_count())));
  k = std::max<std::size_t>(k, 1);
  std::vector<std::size_t> v(k);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<std::size_t> MicroBatchStore::shuffled(std::uint64_t seed) const {
  auto v = all_micro();
  Rng rng(mix64(seed ^ 0x2545f4914f6cdd1dULL));
  shuffle_in_place(v, rng);
  return v;
}

const Batch& MicroBatchStore::acquire(std::size_t micro) {
  if (auto it = resident_.find(micro); it != resident_.end()) return it->second;
  if (capacity_ != 0 && fifo_.size() >= capacity_) {
    const std::size_t victim = fifo_.front();
    fifo_.pop_front();
    resident_.erase(victim);
    evictions_.push_back(victim);
  }
  auto [it, _] = resident_.emplace(micro, data_->rows(micro_rows_.at(micro)));
  fifo_.push_back(micro);
  ++loads_;
  max_resident_ = std::max(max_resident_, fifo_.size());
  return it->second;
}

BatchStream::BatchStream(MicroBatchStore& store, std::size_t effective_batch,
                         std::vector<std::size_t> order)
    : store_(&store), order_(std::move(order)) {
  const auto cands = store.candidates();
  if (std::find(cands.begin(), cands.end(), effective_batch) == cands.end()) {
    throw ArgumentError("batch size " + std::to_string(effective_batch) + " is not a configured candidate");
  }
  per_batch_ = effective_batch / store.micro_batch_size();
  if (store.capacity() != 0 && store.capacity() < per_batch_) {
    throw ArgumentError("store capacity " + std::to_string(store.capacity()) +
                        " cannot hold one batch of " + std::to_string(effective_batch));
  }
  for (auto m : order_) {
    if (m >= store.micro_count()) throw ArgumentError("micro-batch index out of range");
  }
  count_ = order_.size() / per_batch_;
}

std::optional<Batch> BatchStream::next() {
  if (cursor_ >= count_) return std::nullopt;
  const std::size_t micro = store_->micro_batch_size();
  const Dataset& data = *store_->data_;
  Batch out;
  out.inputs.resize(static_cast<Eigen::Index>(per_batch_ * micro), data.inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(per_batch_ * micro), data.targets.cols());
  for (std::size_t k = 0; k < per_batch_; ++k) {
    // Each block is copied out before the next acquire can evict it.
    const Batch& block = store_->acquire(order_[cursor_ * per_batch_ + k]);
    out.inputs.middleRows(static_cast<Eigen::Index>(k * micro), static_cast<Eigen::Index>(micro)) = block.inputs;
    out.targets.middleRows(static_cast<Eigen::Index>(k * micro), static_cast<Eigen::Index>(micro)) = block.targets;
  }
  ++cursor_;
  return out;
}

std::vector<Batch> collect_batches(MicroBatchStore& store, std::size_t effective_batch,
                                   std::vector<std::size_t> order) {
  BatchStream stream(store, effective_batch, std::move(order));
  std::vector<Batch> out;
  out.reserve(stream.batch_count());
  while (auto b = stream.next()) out.push_back(std::move(*b));
  return out;
}

}  // namespace sm2
