// SPDX-License-Identifier: Apache-2.0
#include "sm2/objective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sm2/errors.hpp"

namespace sm2 {

namespace {

// Min-max to [0,1]; zero range maps to 1.
std::vector<double> rescale(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double min = *lo, range = *hi - *lo;
  std::vector<double> out(v.size(), 1.0);
  if (range > 0.0)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - min) / range;
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::vector<RawAttributes> apply_divergence_placeholders(std::span<const RawAttributes> raw,
                                                         double lr_min) {
  std::vector<RawAttributes> out(raw.begin(), raw.end());
  if (out.empty()) return out;
  double worst_perf = 0.0, worst_energy = 0.0;
  bool any_ok = false;
  for (const auto& r : raw) {
    worst_energy = std::max(worst_energy, r.energy_wh);
    if (r.diverged || !std::isfinite(r.performance)) continue;
    if (!any_ok) {
      worst_perf = r.performance;
      any_ok = true;
    } else {
      worst_perf = r.polarity == Polarity::HigherIsBetter ? std::min(worst_perf, r.performance)
                                                           : std::max(worst_perf, r.performance);
    }
  }
  if (!any_ok) throw ArgumentError("every configuration diverged; no placeholder available");
  for (auto& r : out) {
    if (!r.diverged && std::isfinite(r.performance)) continue;
    r.diverged = true;
    r.performance = worst_perf;
    r.energy_wh = worst_energy;
    r.selected_lr = lr_min;
  }
  return out;
}

std::vector<AttributeVector> normalize_attributes(std::span<const RawAttributes> raw) {
  if (raw.empty()) throw ArgumentError("normalization needs at least one entry");
  const Polarity pol = raw.front().polarity;
  std::vector<double> p, e, lr;
  for (const auto& r : raw) {
    if (r.polarity != pol) throw ArgumentError("entries disagree on performance polarity");
    if (!std::isfinite(r.performance) || !std::isfinite(r.energy_wh) || !std::isfinite(r.selected_lr))
      throw ArgumentError("attributes must be finite; apply divergence placeholders first");
    p.push_back(r.performance);
    e.push_back(r.energy_wh);
    lr.push_back(r.selected_lr);
  }
  const auto np = rescale(p), ne = rescale(e), nl = rescale(lr);
  const bool flat_p = std::all_of(np.begin(), np.end(), [](double x) { return x == 1.0; });
  const bool flat_e = std::all_of(ne.begin(), ne.end(), [](double x) { return x == 1.0; });

  std::vector<AttributeVector> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i].config_id = raw[i].config_id;
    out[i].performance = (pol == Polarity::LowerIsBetter && !flat_p) ? 1.0 - np[i] : np[i];
    out[i].energy = flat_e ? 1.0 : 1.0 - ne[i];
    out[i].learning_rate = nl[i];
  }
  return out;
}

double objective_score(const AttributeVector& a, const ObjectiveWeights& w) {
  return w.alpha * a.performance + (1.0 - w.alpha) * (w.beta * a.energy + (1.0 - w.beta) * a.learning_rate);
}

HalvingOutcome halve(std::span<const ScoredConfig> scores) {
  if (scores.size() < 2) throw ArgumentError("halving needs at least two configurations");
  std::vector<ScoredConfig> order(scores.begin(), scores.end());
  std::sort(order.begin(), order.end(), [](const ScoredConfig& a, const ScoredConfig& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.energy != b.energy) return a.energy > b.energy;
    return a.config_id < b.config_id;
  });
  const std::size_t keep = order.size() - order.size() / 2;

  HalvingOutcome out;
  for (const auto& s : order) out.ranking.push_back(s.config_id);
  for (std::size_t i = keep; i < order.size(); ++i) out.dropped.push_back(order[i].config_id);
  std::sort(out.dropped.begin(), out.dropped.end());

  for (std::size_t k = 0; k < keep; ++k) {
    for (std::size_t d = keep; d < order.size(); ++d) {
      const auto& s = order[k];
      const auto& x = order[d];
      if (s.score != x.score) continue;
      std::string why = s.energy != x.energy ? "higher E (" + fmt(s.energy) + " vs " + fmt(x.energy) + ")"
                                             : "lower config id";
      out.tie_breaks.push_back("config " + std::to_string(s.config_id.value) + " and config " +
                               std::to_string(x.config_id.value) + " tied at score " + fmt(s.score) +
                               "; kept config " + std::to_string(s.config_id.value) + " by " + why);
    }
  }
  return out;
}

HalvingDecision decide_halving(std::uint32_t round, std::span<const RawAttributes> raw,
                               const ObjectiveWeights& w, double lr_min) {
  w.validate();
  const auto filled = apply_divergence_placeholders(raw, lr_min);
  const auto norm = normalize_attributes(filled);

  HalvingDecision dec;
  dec.round = round;
  dec.weights = w;
  std::vector<ScoredConfig> scored;
  for (std::size_t i = 0; i < filled.size(); ++i) {
    HalvingEntry e;
    e.raw = filled[i];
    e.normalized = norm[i];
    e.score = objective_score(norm[i], w);
    scored.push_back({filled[i].config_id, e.score, norm[i].energy});
    dec.entries.push_back(e);
  }
  auto outcome = halve(scored);
  for (auto& e : dec.entries)
    e.dropped = std::find(outcome.dropped.begin(), outcome.dropped.end(), e.raw.config_id) !=
                outcome.dropped.end();
  dec.dropped = std::move(outcome.dropped);
  dec.tie_breaks = std::move(outcome.tie_breaks);
  return dec;
}

}  // namespace sm2
