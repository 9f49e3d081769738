// SPDX-License-Identifier: Apache-2.0
#pragma once
// Datasets, synthetic generators, CSV ingestion and the micro-batch store.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace sm2 {

enum class TaskKind : std::uint8_t { Regression, Classification };

// Row-major sample block: one row per sample. Classification targets are a
// single column of integer class labels stored as doubles.
struct Batch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;

  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
};

struct Dataset {
  Eigen::MatrixXd inputs;   // N x d
  Eigen::MatrixXd targets;  // N x m, or N x 1 labels
  TaskKind task = TaskKind::Regression;
  std::size_t num_classes = 0;
  // Rows come in atomic groups of this many consecutive samples; shuffling
  // and splitting never break a group apart.
  std::size_t group_size = 1;
  std::vector<std::size_t> train_order;  // shuffled training rows
  std::vector<std::size_t> holdout;      // held-out rows
  std::string provenance;
  std::optional<double> lambda_max;  // largest Hessian eigenvalue (quadratic bowl only)

  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
  // Model output width: number of classes or number of regression targets.
  std::size_t output_dim() const noexcept;

  // Shuffles groups with `seed`; the first round(fraction * groups) groups
  // become the hold-out split, the rest (in shuffled order) the training order.
  void split(double holdout_fraction, std::uint64_t seed);

  Batch rows(std::span<const std::size_t> idx) const;
  Batch holdout_batch() const { return rows(holdout); }

  // No NaN/Inf, disjoint covering splits, labels in range.
  void validate() const;
};

struct LinearRegressionSpec {
  std::size_t n = 10000;
  std::size_t dim = 8;
  double noise_sigma = 0.1;
};

struct TwoGaussiansSpec {
  std::size_t n = 10000;
  std::size_t dim = 8;
  double separation = 3.0;  // distance between the class means
};

// Least-squares problem whose per-batch Hessian equals Q diag(lambda) Q^T
// exactly for any batch of whole groups; eigenvalues are geometric between
// lambda_max / condition_number and lambda_max.
struct QuadraticBowlSpec {
  std::size_t n = 10000;
  std::size_t dim = 4;
  double condition_number = 10.0;
  double lambda_max = 20.0;
};

using SyntheticSpec = std::variant<LinearRegressionSpec, TwoGaussiansSpec, QuadraticBowlSpec>;

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                           double holdout_fraction = 0.1);

struct CsvSchema {
  std::vector<std::string> target_columns;
  TaskKind task = TaskKind::Regression;
  char delimiter = ',';
};

// Header row required. Every non-target column is an input feature.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, std::uint64_t seed,
                 double holdout_fraction = 0.1);

// Writes inputs then targets (named x0.., y0.. or "label") with full precision.
void write_csv(const Dataset& data, const std::filesystem::path& path, char delimiter = ',');

// Training split chunked into micro-batches of the smallest candidate batch
// size (trailing partial micro-batch dropped). Larger batches are served as
// concatenations of consecutive micro-batches. At most `capacity` micro-batches
// are resident at once (0 = unbounded); the oldest resident block is evicted
// first. Holds a pointer to the dataset, which must outlive the store.
class MicroBatchStore {
 public:
  MicroBatchStore(const Dataset& data, std::span<const std::size_t> batch_candidates,
                  std::size_t capacity = 0);

  std::size_t micro_batch_size() const noexcept { return micro_; }
  std::size_t micro_count() const noexcept { return micro_rows_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::span<const std::size_t> candidates() const noexcept { return candidates_; }

  std::vector<std::size_t> all_micro() const;
  // The first max(1, floor(fraction * count)) micro-batches.
  std::vector<std::size_t> partition(double fraction) const;
  std::vector<std::size_t> shuffled(std::uint64_t seed) const;
  std::span<const std::size_t> micro_rows(std::size_t micro) const { return micro_rows_.at(micro); }

  std::size_t resident() const noexcept { return fifo_.size(); }
  std::size_t max_resident() const noexcept { return max_resident_; }
  std::size_t loads() const noexcept { return loads_; }
  const std::vector<std::size_t>& eviction_log() const noexcept { return evictions_; }

 private:
  friend class BatchStream;

  const Batch& acquire(std::size_t micro);

  const Dataset* data_;
  std::vector<std::size_t> candidates_;
  std::size_t micro_;
  std::size_t capacity_;
  std::vector<std::vector<std::size_t>> micro_rows_;

  std::deque<std::size_t> fifo_;
  std::unordered_map<std::size_t, Batch> resident_;
  std::size_t max_resident_ = 0;
  std::size_t loads_ = 0;
  std::vector<std::size_t> evictions_;
};

// Yields floor(len(order) * micro / effective_batch) batches, each the
// concatenation of effective_batch / micro consecutive micro-batches of
// `order`. The sample stream is identical for every effective batch size.
class BatchStream {
 public:
  BatchStream(MicroBatchStore& store, std::size_t effective_batch, std::vector<std::size_t> order);

  std::optional<Batch> next();
  std::size_t batch_count() const noexcept { return count_; }

 private:
  MicroBatchStore* store_;
  std::size_t per_batch_;
  std::vector<std::size_t> order_;
  std::size_t count_;
  std::size_t cursor_ = 0;
};

// Convenience: materialize every batch of a stream.
std::vector<Batch> collect_batches(MicroBatchStore& store, std::size_t effective_batch,
                                   std::vector<std::size_t> order);

}  // namespace sm2
