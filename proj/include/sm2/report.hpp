// SPDX-License-Identifier: Apache-2.0
#pragma once
// Post-run analysis. Everything here is a pure function of ledgers, so
// identical ledgers produce byte-identical files.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sm2/ledger.hpp"

namespace sm2 {

// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

// Per-config epoch traces, keyed by file name ("trace_config<id>.csv").
// Columns: round,epoch,mode,exploratory,performance,energy_wh,lr,diverged,sim_time_s
std::map<std::string, std::string> trace_csvs(const RunLedger& ledger);

// Exploration traces keyed by "explore_round<r>_config<id>.csv".
// Columns: index,lr,mean_loss,curvature,in_window,selected
std::map<std::string, std::string> exploration_csvs(const RunLedger& ledger);

std::string summary_text(const RunLedger& ledger);

// Writes traces/, explore/ and summary.txt under `dir`; returns written paths.
std::vector<std::filesystem::path> write_report(const RunLedger& ledger,
                                                const std::filesystem::path& dir);

// energy_sm2 / energy_vanilla. Both must be > 0.
double parity(double energy_sm2_wh, double energy_vanilla_wh);
// max / min of the two energies.
double symmetric_parity(double a_wh, double b_wh);

struct ComparisonSummary {
  std::string name;
  double energy_alpha1_wh = 0.0;
  double energy_sm2_wh = 0.0;
  double energy_vanilla_wh = 0.0;
  double reduction_pct = 0.0;  // (alpha1 - sm2) / alpha1 * 100
  double parity = 0.0;
  double symmetric_parity = 0.0;
};

ComparisonSummary compare_totals(std::string name, double energy_alpha1_wh, double energy_sm2_wh,
                                 double energy_vanilla_wh);

// Requires completed ledgers with one fingerprint, the first run at alpha = 1
// and a vanilla baseline; throws ComparisonError otherwise.
ComparisonSummary compare(const RunLedger& alpha1, const RunLedger& sm2, const RunLedger& vanilla,
                          std::string name = "experiment");

std::string comparison_text(std::span<const ComparisonSummary> rows);
std::string comparison_csv(std::span<const ComparisonSummary> rows);

}  // namespace sm2
