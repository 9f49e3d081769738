// SPDX-License-Identifier: Apache-2.0
#pragma once
// Attribute normalization, the weighted objective and the halving rule.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sm2/types.hpp"

namespace sm2 {

// Replaces the attributes of diverged entries with the worst values of the
// round: worst performance among finite entries, highest energy, and lr_min.
// Throws ArgumentError when every entry diverged.
std::vector<RawAttributes> apply_divergence_placeholders(std::span<const RawAttributes> raw,
                                                         double lr_min);

// Min-max rescales each attribute across the entries. Performance is flipped
// for LowerIsBetter, energy is inverted (least energy -> 1), learning rate is
// kept (largest -> 1). An attribute with zero range maps to 1.0 everywhere.
// All entries must share one polarity and carry finite values.
std::vector<AttributeVector> normalize_attributes(std::span<const RawAttributes> raw);

// alpha * P + (1 - alpha) * (beta * E + (1 - beta) * LR)
double objective_score(const AttributeVector& attrs, const ObjectiveWeights& w);

struct ScoredConfig {
  ConfigId config_id;
  double score = 0.0;
  double energy = 0.0;  // normalized E, used to break ties
};

struct HalvingOutcome {
  std::vector<ConfigId> dropped;          // ascending id
  std::vector<ConfigId> ranking;          // best first
  std::vector<std::string> tie_breaks;    // one line per tie across the cut
};

// Drops the floor(n/2) lowest scores. Equal scores rank by higher E, then
// lower config id. Requires n >= 2.
HalvingOutcome halve(std::span<const ScoredConfig> scores);

// Placeholders, normalization, scoring and halving in one step.
HalvingDecision decide_halving(std::uint32_t round, std::span<const RawAttributes> raw,
                               const ObjectiveWeights& w, double lr_min);

}  // namespace sm2
