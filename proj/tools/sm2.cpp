// SPDX-License-Identifier: Apache-2.0
// sm2: energy-aware hyperparameter search from the command line.
#include <CLI11.hpp>

#include <iostream>

#include "sm2/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware successive-halving search over batch size and learning rate"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 ok, 1 internal error, 2 invalid config/arguments/input file,\n"
      "3 run aborted (all configurations or the final one diverged), 4 missing or\n"
      "unwritable file, 5 ledgers cannot be compared.");

  sm2::RunArgs run;
  std::uint64_t run_seed = 0;
  std::string run_out, run_pm, run_mode;
  double run_alpha = 0.0;
  auto* run_cmd = app.add_subcommand("run", "Run a search (or a vanilla baseline) and write its ledger and report");
  run_cmd->add_option("--config", run.config, "Run configuration file (JSON)")->required();
  auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "Override run.seed");
  auto* run_out_opt = run_cmd->add_option("--out", run_out, "Output directory (overrides run.out_dir)");
  auto* run_pm_opt = run_cmd->add_option("--power-model", run_pm, "JSON file with energy-section keys to override");
  auto* run_mode_opt =
      run_cmd->add_option("--mode", run_mode, "Override run.mode")->check(CLI::IsMember({"sm2", "vanilla"}));
  auto* run_alpha_opt = run_cmd->add_option("--alpha", run_alpha, "Override objective.alpha");

  sm2::ValidateArgs val;
  std::uint64_t val_seed = 0;
  std::string val_pm;
  auto* val_cmd = app.add_subcommand("validate", "Check a configuration and print the effective settings");
  val_cmd->add_option("--config", val.config, "Run configuration file (JSON)")->required();
  auto* val_seed_opt = val_cmd->add_option("--seed", val_seed, "Override run.seed");
  auto* val_pm_opt = val_cmd->add_option("--power-model", val_pm, "JSON file with energy-section keys to override");

  sm2::ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Regenerate traces and summary from a ledger");
  rep_cmd->add_option("--ledger", rep.ledger, "ledger.jsonl written by a run")->required();
  rep_cmd->add_option("--out", rep.out_dir, "Output directory")->required();

  sm2::CompareArgs cmp;
  std::string cmp_csv;
  auto* cmp_cmd = app.add_subcommand("compare", "Energy reduction and parity between three runs");
  cmp_cmd->add_option("--alpha1", cmp.alpha1, "Ledger of the sm2 run with alpha = 1")->required();
  cmp_cmd->add_option("--sm2", cmp.sm2, "Ledger of the sm2 run under test")->required();
  cmp_cmd->add_option("--vanilla", cmp.vanilla, "Ledger of the vanilla baseline")->required();
  cmp_cmd->add_option("--name", cmp.name, "Row label")->capture_default_str();
  auto* cmp_csv_opt = cmp_cmd->add_option("--csv", cmp_csv, "Also write the row as CSV to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sm2::kExitInvalidInput;
  }

  if (*run_cmd) {
    if (*run_seed_opt) run.seed = run_seed;
    if (*run_out_opt) run.out_dir = run_out;
    if (*run_pm_opt) run.power_model = run_pm;
    if (*run_mode_opt) run.mode = run_mode;
    if (*run_alpha_opt) run.alpha = run_alpha;
    return sm2::cmd_run(run, std::cout, std::cerr);
  }
  if (*val_cmd) {
    if (*val_seed_opt) val.seed = val_seed;
    if (*val_pm_opt) val.power_model = val_pm;
    return sm2::cmd_validate(val, std::cout, std::cerr);
  }
  if (*rep_cmd) return sm2::cmd_report(rep, std::cout, std::cerr);
  if (*cmp_csv_opt) cmp.csv_out = cmp_csv;
  return sm2::cmd_compare(cmp, std::cout, std::cerr);
}
