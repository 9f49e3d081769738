// SPDX-License-Identifier: Apache-2.0
#pragma once
// Subcommand implementations behind the sm2 executable. Each returns the
// process exit code and writes human-readable output to the given streams.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace sm2 {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInvalidInput = 2,  // config, argument or malformed input file
  kExitRunAborted = 3,
  kExitIo = 4,  // missing or unwritable file
  kExitComparison = 5,
};

int exit_code_for(const std::exception& e) noexcept;

struct RunArgs {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> power_model;
  std::optional<std::string> mode;
  std::optional<double> alpha;
};

struct ValidateArgs {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> power_model;
};

struct ReportArgs {
  std::filesystem::path ledger;
  std::filesystem::path out_dir;
};

struct CompareArgs {
  std::filesystem::path alpha1;
  std::filesystem::path sm2;
  std::filesystem::path vanilla;
  std::string name = "experiment";
  std::optional<std::filesystem::path> csv_out;
};

// Throwing forms of run and validate.
void run_experiment(const RunArgs& args, std::ostream& out);
void validate_experiment(const ValidateArgs& args, std::ostream& out);

// Writes ledger.jsonl, config.json, final_model.snap, traces/, explore/ and
// summary.txt under the output directory.
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
// Prints the effective configuration, one "key = value  (origin)" per line.
int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err);
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);

}  // namespace sm2
