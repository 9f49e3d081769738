// SPDX-License-Identifier: Apache-2.0
#include "sm2/commands.hpp"

#include <fstream>

#include "sm2/config.hpp"
#include "sm2/errors.hpp"
#include "sm2/ledger.hpp"
#include "sm2/report.hpp"
#include "sm2/scheduler.hpp"

namespace sm2 {

namespace fs = std::filesystem;

namespace {

void write_bytes(const fs::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("failed writing " + path.string());
}

RunConfig load_with_overrides(const fs::path& path, const std::optional<std::uint64_t>& seed,
                              const std::optional<fs::path>& power_model) {
  RunConfig cfg = load_config(path);
  if (seed) {
    cfg.run.seed = *seed;
    cfg.origins["run.seed"] = "command line";
  }
  if (power_model) apply_power_model_file(cfg, *power_model);
  return cfg;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const RunAborted*>(&e)) return kExitRunAborted;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const ComparisonError*>(&e)) return kExitComparison;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const OrderingError*>(&e))
    return kExitInvalidInput;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitIo;
  return kExitInternal;
}

void run_experiment(const RunArgs& args, std::ostream& out) {
  RunConfig cfg = load_with_overrides(args.config, args.seed, args.power_model);
  if (args.mode) cfg.run.mode = *args.mode;
  if (args.alpha) cfg.objective.alpha = *args.alpha;
  if (args.out_dir) cfg.run.out_dir = *args.out_dir;
  validate_config(cfg);

  const Dataset data = build_dataset(cfg);
  const BuiltinLearnerSpec spec = learner_spec(cfg, data);
  const std::string fingerprint = experiment_fingerprint(cfg);

  const fs::path dir = cfg.run.out_dir;
  ensure_dir(dir);
  {
    const std::string text = effective_config_json(cfg).dump(2) + "\n";
    write_bytes(dir / "config.json", text.data(), text.size());
  }

  MicroBatchStore store(data, cfg.batch_candidates, cfg.run.store_capacity);
  SimulatedPowerMonitor monitor(power_model(cfg), cfg.poll_interval_s);
  RunLedger ledger;
  ledger.attach_file(dir / "ledger.jsonl");
  Sm2Scheduler scheduler(scheduler_options(cfg, fingerprint), data, store, monitor, ledger,
                         [spec](const HyperConfig&) -> std::unique_ptr<Trainer> { return make_learner(spec); });

  RunResult result;
  try {
    result = cfg.run.mode == "vanilla"
                 ? scheduler.run_vanilla(cfg.run.vanilla_batch_size, cfg.run.vanilla_lr,
                                         cfg.batch_candidates.size())
                 : scheduler.run();
  } catch (const RunAborted&) {
    // Keep whatever was recorded so the failure can be inspected.
    if (ledger.run_start()) write_report(ledger, dir);
    throw;
  }

  write_bytes(dir / "final_model.snap", result.final_snapshot.bytes.data(), result.final_snapshot.bytes.size());
  write_report(ledger, dir);

  out << "final config: " << result.final_config.value << " (batch " << result.final_batch_size << ", lr "
      << format_number(result.final_lr) << ")" << (result.truncated ? " [truncated]" : "") << '\n'
      << "total energy (Wh): " << format_number(result.total_energy_wh) << '\n'
      << "final performance: " << format_number(result.final_performance) << " ("
      << to_string(result.polarity) << ")\n"
      << "model digest: " << result.final_snapshot.digest() << '\n'
      << "output: " << dir.string() << '\n';
}

void validate_experiment(const ValidateArgs& args, std::ostream& out) {
  const RunConfig cfg = load_with_overrides(args.config, args.seed, args.power_model);
  validate_config(cfg);
  out << effective_config_text(cfg);
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    run_experiment(args, out);
    return int{kExitOk};
  });
}

int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate_experiment(args, out);
    return int{kExitOk};
  });
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunLedger ledger = RunLedger::read(args.ledger);
    ensure_dir(args.out_dir);
    for (const auto& p : write_report(ledger, args.out_dir)) out << p.string() << '\n';
    return int{kExitOk};
  });
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunLedger a1 = RunLedger::read(args.alpha1);
    const RunLedger sm = RunLedger::read(args.sm2);
    const RunLedger va = RunLedger::read(args.vanilla);
    const ComparisonSummary row = compare(a1, sm, va, args.name);
    out << comparison_text({&row, 1});
    if (args.csv_out) {
      const std::string csv = comparison_csv({&row, 1});
      write_bytes(*args.csv_out, csv.data(), csv.size());
    }
    return int{kExitOk};
  });
}

}  // namespace sm2
