// SPDX-License-Identifier: Apache-2.0
#include "sm2/lr_explorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sm2/errors.hpp"

namespace sm2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string_view to_string(GridSpacing s) noexcept { return s == GridSpacing::Log ? "log" : "linear"; }

std::string_view to_string(CurvatureAxis a) noexcept {
  return a == CurvatureAxis::Index ? "index" : "lr";
}

std::string_view to_string(ExplorationIsolation i) noexcept {
  return i == ExplorationIsolation::PerLr ? "per_lr" : "shared";
}

GridSpacing grid_spacing_from_string(std::string_view s) {
  if (s == "log") return GridSpacing::Log;
  if (s == "linear") return GridSpacing::Linear;
  throw ArgumentError("unknown grid spacing '" + std::string(s) + "'");
}

CurvatureAxis curvature_axis_from_string(std::string_view s) {
  if (s == "index") return CurvatureAxis::Index;
  if (s == "lr") return CurvatureAxis::LearningRate;
  throw ArgumentError("unknown curvature axis '" + std::string(s) + "'");
}

ExplorationIsolation isolation_from_string(std::string_view s) {
  if (s == "per_lr") return ExplorationIsolation::PerLr;
  if (s == "shared") return ExplorationIsolation::Shared;
  throw ArgumentError("unknown exploration isolation '" + std::string(s) + "'");
}

void LrGrid::validate() const {
  if (!(lr_min > 0.0) || !std::isfinite(lr_min)) throw ConfigError("lr_grid.lr_min", "must be > 0");
  if (!(lr_max > lr_min) || !std::isfinite(lr_max))
    throw ConfigError("lr_grid.lr_max", "must be finite and greater than lr_min");
  if (count < 4) throw ConfigError("lr_grid.count", "must be >= 4");
}

std::vector<double> LrGrid::points() const {
  validate();
  std::vector<double> g(count);
  const double last = static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / last;
    g[i] = spacing == GridSpacing::Log ? lr_min * std::pow(lr_max / lr_min, t)
                                       : lr_min + (lr_max - lr_min) * t;
  }
  g.front() = lr_min;
  g.back() = lr_max;
  return g;
}

void ExplorerOptions::validate(const LrGrid& grid) const {
  if (window == 0) throw ConfigError("lr_grid.window", "must be >= 1");
  if (grid.count < 2 || grid.count - 2 < window)
    throw ConfigError("lr_grid.window", "needs count - 2 >= window (count " +
                                            std::to_string(grid.count) + ", window " +
                                            std::to_string(window) + ")");
  if (!(divergence_factor == 0.0 || divergence_factor > 1.0) || !std::isfinite(divergence_factor))
    throw ConfigError("lr_grid.divergence_factor", "must be 0 (off) or > 1");
}

std::vector<double> group_mean_losses(std::span<const double> losses, std::size_t k) {
  if (k == 0) throw ArgumentError("group count must be >= 1");
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> n(k, 0);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const std::size_t j = i % k;
    sum[j] = std::isfinite(losses[i]) ? sum[j] + losses[i] : kInf;
    ++n[j];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (n[j] == 0) throw ArgumentError("a learning-rate group received no batches");
    if (std::isfinite(sum[j])) sum[j] /= static_cast<double>(n[j]);
  }
  return sum;
}

CyclicalResult cyclical_losses(Trainer& trainer, std::span<const Batch> batches,
                               std::span<const double> grid, const ExplorerOptions& opts,
                               const std::function<void(std::size_t)>& on_batch) {
  const std::size_t k = grid.size();
  if (k == 0) throw ArgumentError("empty learning-rate grid");
  if (batches.size() < k)
    throw ConfigError("budget.exploration_fraction",
                      "exploration partition yields " + std::to_string(batches.size()) +
                          " batches but the grid has " + std::to_string(k) +
                          " points; raise the exploration fraction or lower lr_grid.count");

  std::vector<double> losses(batches.size(), kInf);
  // Reference for the divergence factor: mean loss of the first K batches.
  // Under per_lr isolation those are all taken at the starting state; a
  // single batch would be too noisy at small batch sizes.
  double reference = 0.0;
  std::size_t n_reference = 0;
  const auto too_high = [&](std::size_t i, double loss) {
    if (i < k) {
      reference += loss;
      ++n_reference;
      return false;
    }
    return opts.divergence_factor > 0.0 && n_reference > 0 &&
           loss > opts.divergence_factor * reference / static_cast<double>(n_reference);
  };

  CyclicalResult out;
  if (opts.isolation == ExplorationIsolation::PerLr) {
    const TrainerSnapshot start = trainer.snapshot();
    std::vector<TrainerSnapshot> state(k, start);
    std::vector<bool> dead(k, false);
    for (std::size_t i = 0; i < batches.size(); ++i) {
      const std::size_t j = i % k;
      if (on_batch) on_batch(batches[i].size());
      if (dead[j]) continue;
      trainer.restore(state[j]);
      double loss = kInf;
      try {
        loss = trainer.train_batches(batches.subspan(i, 1), grid.subspan(j, 1)).front();
      } catch (const DivergenceError&) {
        loss = kInf;
      }
      if (!std::isfinite(loss) || too_high(i, loss)) {
        dead[j] = true;
        continue;
      }
      losses[i] = loss;
      state[j] = trainer.snapshot();
    }
    out.end_states = std::move(state);
  } else {
    bool dead = false;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      const std::size_t j = i % k;
      if (on_batch) on_batch(batches[i].size());
      if (dead) continue;
      double loss = kInf;
      try {
        loss = trainer.train_batches(batches.subspan(i, 1), grid.subspan(j, 1)).front();
      } catch (const DivergenceError&) {
        loss = kInf;
      }
      if (!std::isfinite(loss) || too_high(i, loss)) {
        dead = true;
        continue;
      }
      losses[i] = loss;
    }
    out.end_states.push_back(trainer.snapshot());
  }

  out.mean_loss = group_mean_losses(losses, k);
  out.visits.assign(k, 0);
  for (std::size_t i = 0; i < batches.size(); ++i) ++out.visits[i % k];
  return out;
}

std::vector<double> loss_curvature(std::span<const double> L) {
  if (L.size() < 3) throw ArgumentError("curvature needs at least 3 points");
  std::vector<double> c(L.size() - 2);
  for (std::size_t j = 1; j + 1 < L.size(); ++j) {
    c[j - 1] = all_finite({L[j - 1], L[j], L[j + 1]}) ? L[j + 1] - 2.0 * L[j] + L[j - 1] : kInf;
  }
  return c;
}

std::vector<double> loss_curvature(std::span<const double> L, std::span<const double> x,
                                   CurvatureAxis axis) {
  if (axis == CurvatureAxis::Index) return loss_curvature(L);
  if (L.size() < 3) throw ArgumentError("curvature needs at least 3 points");
  if (x.size() != L.size()) throw ArgumentError("grid and loss lengths differ");
  std::vector<double> c(L.size() - 2);
  for (std::size_t j = 1; j + 1 < L.size(); ++j) {
    if (!all_finite({L[j - 1], L[j], L[j + 1]})) {
      c[j - 1] = kInf;
      continue;
    }
    const double right = (L[j + 1] - L[j]) / (x[j + 1] - x[j]);
    const double left = (L[j] - L[j - 1]) / (x[j] - x[j - 1]);
    c[j - 1] = 2.0 * (right - left) / (x[j + 1] - x[j - 1]);
  }
  return c;
}

StableLrSelection select_stable_lr(std::span<const double> mean_loss, std::span<const double> grid,
                                   std::size_t window, CurvatureAxis axis) {
  if (grid.size() != mean_loss.size()) throw ArgumentError("grid and loss lengths differ");
  if (window == 0 || mean_loss.size() < 2 || mean_loss.size() - 2 < window)
    throw ArgumentError("window does not fit the curvature sequence");

  StableLrSelection sel;
  sel.curvature = loss_curvature(mean_loss, grid, axis);
  const std::size_t n_windows = sel.curvature.size() - window + 1;
  sel.window_scores.resize(n_windows);
  std::vector<double> finite;
  for (std::size_t a = 0; a < n_windows; ++a) {
    double s = 0.0;
    for (std::size_t j = a; j < a + window; ++j) {
      if (!std::isfinite(sel.curvature[j])) {
        s = kInf;
        break;
      }
      s += std::abs(sel.curvature[j]);
    }
    if (std::isfinite(s)) {
      s /= static_cast<double>(window);
      finite.push_back(s);
    }
    sel.window_scores[a] = s;
  }

  if (finite.empty()) {
    sel.fallback = true;
    sel.selected_index = 0;
    sel.selected_lr = grid[0];
    return sel;
  }

  std::sort(finite.begin(), finite.end());
  const std::size_t m = finite.size();
  const double tau = m % 2 == 1 ? finite[m / 2] : 0.5 * (finite[m / 2 - 1] + finite[m / 2]);

  std::optional<std::size_t> best;
  double best_mean = -kInf;
  for (std::size_t a = 0; a < n_windows; ++a) {
    if (!(sel.window_scores[a] <= tau)) continue;
    // Curvature entry j is centred on grid point j + 1.
    double mean_lr = 0.0;
    for (std::size_t j = a; j < a + window; ++j) mean_lr += grid[j + 1];
    mean_lr /= static_cast<double>(window);
    if (mean_lr > best_mean) {
      best_mean = mean_lr;
      best = a;
    }
  }
  sel.window_begin = *best;
  sel.window_end = *best + window;
  sel.selected_index = *best + window;
  sel.selected_lr = grid[sel.selected_index];
  return sel;
}

}  // namespace sm2
