// SPDX-License-Identifier: Apache-2.0
#pragma once
// Reference values produced by tests/oracles/compute_oracles.py, which does
// not link against the engine. Frozen here; regenerate only on purpose.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sm2::oracle {

// Default simulated device: argmin over {8..1024} of power / throughput.
inline constexpr std::size_t kEnergyOptimalBatch = 256;
inline constexpr std::array<double, 8> kJoulesPerSample = {
    0.195341851, 0.100094787, 0.053120535, 0.030560317,
    0.020703770, 0.018296120, 0.023076923, 0.023076923};
inline constexpr double kPower256 = 150.9429939906239;

// Default log grid, points 11..13.
inline constexpr std::array<double, 3> kGrid11to13 = {0.0545559478116852, 0.07847599703514613,
                                                      0.11288378916846892};
// Bowl with lambda_max = 20: 2 / lambda_max = 0.1 lies between grid points 12 and 13.
inline constexpr std::size_t kStableBracketLow = 12;
inline constexpr std::size_t kStableBracketHigh = 13;

// Published energies (alpha=1, sm2, vanilla) and the derived quotients.
struct TableRow {
  const char* name;
  double alpha1, sm2, vanilla;
  int reduction_pct;          // nearest percent
  double symmetric_parity;    // two decimals
};
inline constexpr std::array<TableRow, 3> kTable = {{
    {"resnet18", 49.7, 45.8, 26.0, 8, 1.76},
    {"lstm", 28.0, 14.8, 16.4, 47, 1.11},
    {"transformer", 48.5, 40.7, 69.4, 16, 1.70},
}};

// Rigged halving: held-out performance by config id (batch 8..1024), equal
// selected LR everywhere, noiseless energy.
inline constexpr std::array<double, 8> kRigPerformance = {0.5, 0.91, 0.9, 0.9, 0.9, 0.9, 0.5, 0.5};
inline const std::vector<std::vector<std::uint32_t>> kRigDropsAlpha075 = {{0, 1, 6, 7}, {2, 3}, {4}};
inline constexpr std::uint32_t kRigFinalAlpha075 = 5;
inline const std::vector<std::vector<std::uint32_t>> kRigDropsAlpha1 = {{0, 2, 6, 7}, {3, 4}, {5}};
inline constexpr std::uint32_t kRigFinalAlpha1 = 1;
// Max / min energy per epoch among the configs surviving round 0 at alpha 0.75.
// Epochs cover whole batches only, so this is not the plain J/sample ratio.
inline constexpr double kRigSurvivorEnergySpread = 2.9067;

}  // namespace sm2::oracle
