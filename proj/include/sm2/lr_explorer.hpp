// SPDX-License-Identifier: Apache-2.0
#pragma once
// Cyclical learning-rate exploration and curvature-based selection of the
// largest stable learning rate.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sm2/dataio.hpp"
#include "sm2/trainer.hpp"

namespace sm2 {

enum class GridSpacing : std::uint8_t { Log, Linear };
// Axis the second difference is taken over: grid index (log-LR for a log
// grid) or the raw learning rate with non-uniform spacing.
enum class CurvatureAxis : std::uint8_t { Index, LearningRate };
// per_lr: every candidate trains its own branch from the pre-exploration
// state. shared: one trajectory, the rate rotates from batch to batch.
enum class ExplorationIsolation : std::uint8_t { PerLr, Shared };

std::string_view to_string(GridSpacing s) noexcept;
std::string_view to_string(CurvatureAxis a) noexcept;
std::string_view to_string(ExplorationIsolation i) noexcept;
GridSpacing grid_spacing_from_string(std::string_view s);
CurvatureAxis curvature_axis_from_string(std::string_view s);
ExplorationIsolation isolation_from_string(std::string_view s);

struct LrGrid {
  double lr_min = 0.001;
  double lr_max = 1.0;
  std::size_t count = 20;
  GridSpacing spacing = GridSpacing::Log;

  void validate() const;
  // Strictly increasing; first point is lr_min and last is exactly lr_max.
  std::vector<double> points() const;
};

struct ExplorerOptions {
  std::size_t window = 5;
  CurvatureAxis axis = CurvatureAxis::Index;
  ExplorationIsolation isolation = ExplorationIsolation::PerLr;
  // A loss above this multiple of the mean loss of the first K batches
  // counts as diverged. 0 disables the check so only non-finite losses do.
  double divergence_factor = 4.0;

  void validate(const LrGrid& grid) const;
};

struct CyclicalResult {
  std::vector<double> mean_loss;  // one per grid point; +inf when diverged
  std::vector<std::size_t> visits;
  // Trainer state after exploration: one per grid point (per_lr) or a single
  // entry (shared).
  std::vector<TrainerSnapshot> end_states;
};

// Groups per-batch losses by (i mod k) and averages them. A non-finite loss
// makes its group +inf.
std::vector<double> group_mean_losses(std::span<const double> losses, std::size_t k);

// Batch i trains at grid[i mod K]. `on_batch` is called once per batch with
// its size, including batches of branches that already diverged (the device
// still spends the time). The trainer ends in an unspecified state; callers
// restore their own snapshot. Throws ConfigError if batches < K.
CyclicalResult cyclical_losses(Trainer& trainer, std::span<const Batch> batches,
                               std::span<const double> grid, const ExplorerOptions& opts,
                               const std::function<void(std::size_t)>& on_batch = {});

// Central second difference, length K-2. Any non-finite operand gives +inf.
std::vector<double> loss_curvature(std::span<const double> mean_loss);
// Same on the raw-LR axis: 2 * (slope_right - slope_left) / (x[j+1] - x[j-1]).
std::vector<double> loss_curvature(std::span<const double> mean_loss, std::span<const double> grid,
                                   CurvatureAxis axis);

struct StableLrSelection {
  std::vector<double> curvature;
  std::vector<double> window_scores;  // one per window start
  std::optional<std::size_t> window_begin;  // curvature index, inclusive
  std::optional<std::size_t> window_end;    // exclusive
  std::size_t selected_index = 0;           // into the grid
  double selected_lr = 0.0;
  bool fallback = false;
};

// Slides a window of `window` curvature entries, scores each by mean |c|
// (+inf if any entry is), keeps windows scoring at most the median finite
// score and picks the one with the largest mean LR (lower start on ties).
// The selected rate is the largest grid point centred inside the window.
// Without any finite window it falls back to grid[0] and sets `fallback`.
StableLrSelection select_stable_lr(std::span<const double> mean_loss, std::span<const double> grid,
                                   std::size_t window,
                                   CurvatureAxis axis = CurvatureAxis::Index);

}  // namespace sm2
