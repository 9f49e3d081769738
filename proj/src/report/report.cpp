// SPDX-License-Identifier: Apache-2.0
#include "sm2/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "sm2/errors.hpp"

namespace sm2 {

namespace fs = std::filesystem;

namespace {

using EpochKey = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;  // config, round, epoch

struct EpochRow {
  const EpochEnergyRecord* energy = nullptr;
  const EpochMetricsRecord* metrics = nullptr;
};

std::map<EpochKey, EpochRow> join_epochs(const RunLedger& ledger) {
  std::map<EpochKey, EpochRow> rows;
  for (const auto& ev : ledger.events()) {
    if (const auto* e = std::get_if<EpochEnergyRecord>(&ev))
      rows[{e->config_id.value, e->round, e->epoch_index}].energy = e;
    else if (const auto* m = std::get_if<EpochMetricsRecord>(&ev))
      rows[{m->config_id.value, m->round, m->epoch_index}].metrics = m;
  }
  return rows;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string pct(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << (std::abs(v) < 0.005 ? 0.0 : v);  // no "-0.00"
  return os.str();
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::map<std::string, std::string> trace_csvs(const RunLedger& ledger) {
  std::map<std::uint32_t, std::string> by_config;
  if (const RunStart* start = ledger.run_start())
    for (const auto& c : start->configs) by_config[c.id.value];
  for (const auto& [key, row] : join_epochs(ledger)) {
    auto& s = by_config[std::get<0>(key)];
    const Mode mode = row.energy ? row.energy->mode : row.metrics->mode;
    s += std::to_string(std::get<1>(key)) + ',' + std::to_string(std::get<2>(key)) + ',' +
         std::string(to_string(mode)) + ',' + (mode == Mode::Exploratory ? "1" : "0") + ',';
    s += (row.metrics ? format_number(row.metrics->performance) : "") + ',';
    s += (row.energy ? format_number(row.energy->energy_wh) : "") + ',';
    s += (row.metrics ? format_number(row.metrics->selected_lr) : "") + ',';
    s += std::string(row.metrics && row.metrics->diverged ? "1" : "0") + ',';
    const double t = row.metrics ? row.metrics->sim_time_s : row.energy->sim_time_s;
    s += format_number(t) + '\n';
  }
  std::map<std::string, std::string> out;
  for (auto& [id, body] : by_config)
    out["trace_config" + std::to_string(id) + ".csv"] =
        "round,epoch,mode,exploratory,performance,energy_wh,lr,diverged,sim_time_s\n" + body;
  return out;
}

std::map<std::string, std::string> exploration_csvs(const RunLedger& ledger) {
  std::map<std::string, std::string> out;
  for (const auto& ev : ledger.events()) {
    const auto* m = std::get_if<EpochMetricsRecord>(&ev);
    if (!m || !m->exploration) continue;
    const auto& x = *m->exploration;
    std::string s = "index,lr,mean_loss,curvature,in_window,selected\n";
    for (std::size_t i = 0; i < x.losses.size(); ++i) {
      // Curvature entry j sits on grid point j + 1.
      const bool has_c = i >= 1 && i - 1 < x.curvature.size();
      const bool in_window = has_c && x.window_begin && i - 1 >= *x.window_begin && i - 1 < *x.window_end;
      s += std::to_string(i) + ',' + format_number(x.losses[i].lr) + ',' +
           format_number(x.losses[i].mean_loss) + ',' + (has_c ? format_number(x.curvature[i - 1]) : "") +
           ',' + (in_window ? "1" : "0") + ',' + (x.losses[i].lr == m->selected_lr ? "1" : "0") + '\n';
    }
    // Several exploratory epochs in one round: the last one wins, matching
    // the attributes used for halving.
    out["explore_round" + std::to_string(m->round) + "_config" + std::to_string(m->config_id.value) + ".csv"] =
        std::move(s);
  }
  return out;
}

std::string summary_text(const RunLedger& ledger) {
  const RunStart* start = ledger.run_start();
  if (!start) throw ArgumentError("ledger has no run_start event");
  std::ostringstream os;
  os << "mode: " << start->mode << '\n'
     << "fingerprint: " << start->fingerprint << '\n'
     << "seed: " << start->seed << '\n'
     << "weights: alpha=" << format_number(start->weights.alpha)
     << " beta=" << format_number(start->weights.beta) << '\n'
     << "configurations: " << start->configs.size() << '\n';

  double explore = 0.0, thorough = 0.0;
  std::map<std::uint32_t, std::pair<double, double>> rounds;
  for (const auto& ev : ledger.events()) {
    if (const auto* e = std::get_if<EpochEnergyRecord>(&ev)) {
      auto& r = rounds[e->round];
      (e->mode == Mode::Exploratory ? r.first : r.second) += e->energy_wh;
      (e->mode == Mode::Exploratory ? explore : thorough) += e->energy_wh;
    }
  }
  os << "\nenergy per round (Wh): round exploratory thorough total\n";
  for (const auto& [r, v] : rounds)
    os << "  " << r << ' ' << format_number(v.first) << ' ' << format_number(v.second) << ' '
       << format_number(v.first + v.second) << '\n';
  os << "energy total (Wh): " << format_number(ledger_total_energy(ledger))
     << " (exploratory " << format_number(explore) << ", thorough " << format_number(thorough) << ")\n";

  for (const auto& ev : ledger.events()) {
    const auto* h = std::get_if<HalvingDecision>(&ev);
    if (!h) continue;
    os << "\nhalving round " << h->round << ": config P E LR score dropped\n";
    for (const auto& e : h->entries)
      os << "  " << e.raw.config_id.value << ' ' << format_number(e.normalized.performance) << ' '
         << format_number(e.normalized.energy) << ' ' << format_number(e.normalized.learning_rate) << ' '
         << format_number(e.score) << ' ' << (e.dropped ? "yes" : "no") << (e.raw.diverged ? " (diverged)" : "")
         << '\n';
    for (const auto& t : h->tie_breaks) os << "  tie: " << t << '\n';
  }

  if (const FinalSelection* fin = ledger.final_selection()) {
    std::optional<double> perf;
    for (const auto& ev : ledger.events())
      if (const auto* m = std::get_if<EpochMetricsRecord>(&ev);
          m && m->config_id == fin->config_id && m->mode == Mode::Thorough && !m->diverged)
        perf = m->performance;
    os << "\nfinal config: " << fin->config_id.value << " (batch " << fin->batch_size
       << ", lr " << format_number(fin->final_lr) << ")" << (fin->truncated ? " [truncated]" : "") << '\n'
       << "final epochs: " << fin->total_epochs << '\n'
       << "final performance: " << (perf ? format_number(*perf) : "n/a") << '\n';
  } else {
    os << "\nrun incomplete: no final selection\n";
  }
  return os.str();
}

std::vector<fs::path> write_report(const RunLedger& ledger, const fs::path& dir) {
  std::vector<fs::path> written;
  fs::create_directories(dir / "traces");
  fs::create_directories(dir / "explore");
  for (const auto& [name, body] : trace_csvs(ledger)) {
    written.push_back(dir / "traces" / name);
    write_file(written.back(), body);
  }
  for (const auto& [name, body] : exploration_csvs(ledger)) {
    written.push_back(dir / "explore" / name);
    write_file(written.back(), body);
  }
  written.push_back(dir / "summary.txt");
  write_file(written.back(), summary_text(ledger));
  return written;
}

double parity(double energy_sm2_wh, double energy_vanilla_wh) {
  if (!(energy_sm2_wh > 0.0) || !(energy_vanilla_wh > 0.0))
    throw ArgumentError("parity needs positive energies");
  return energy_sm2_wh / energy_vanilla_wh;
}

double symmetric_parity(double a_wh, double b_wh) {
  if (!(a_wh > 0.0) || !(b_wh > 0.0)) throw ArgumentError("parity needs positive energies");
  return std::max(a_wh, b_wh) / std::min(a_wh, b_wh);
}

ComparisonSummary compare_totals(std::string name, double a1, double sm2, double vanilla) {
  if (!(a1 > 0.0)) throw ArgumentError("alpha=1 energy must be > 0");
  ComparisonSummary s;
  s.name = std::move(name);
  s.energy_alpha1_wh = a1;
  s.energy_sm2_wh = sm2;
  s.energy_vanilla_wh = vanilla;
  s.reduction_pct = (a1 - sm2) / a1 * 100.0;
  s.parity = parity(sm2, vanilla);
  s.symmetric_parity = symmetric_parity(sm2, vanilla);
  return s;
}

ComparisonSummary compare(const RunLedger& alpha1, const RunLedger& sm2, const RunLedger& vanilla,
                          std::string name) {
  const RunLedger* all[] = {&alpha1, &sm2, &vanilla};
  const char* label[] = {"alpha1", "sm2", "vanilla"};
  for (int i = 0; i < 3; ++i) {
    if (!all[i]->run_start() || !all[i]->final_selection())
      throw ComparisonError(std::string(label[i]) + " ledger is not a completed run");
  }
  const auto& fp = alpha1.run_start()->fingerprint;
  for (int i = 1; i < 3; ++i)
    if (all[i]->run_start()->fingerprint != fp)
      throw ComparisonError(std::string("experiment fingerprints differ: alpha1 ") + fp + ", " + label[i] +
                            " " + all[i]->run_start()->fingerprint);
  if (alpha1.run_start()->mode != "sm2" || sm2.run_start()->mode != "sm2")
    throw ComparisonError("alpha1 and sm2 ledgers must come from sm2-mode runs");
  if (vanilla.run_start()->mode != "vanilla") throw ComparisonError("vanilla ledger is not a vanilla run");
  if (alpha1.run_start()->weights.alpha != 1.0)
    throw ComparisonError("alpha1 ledger was run with alpha=" +
                          format_number(alpha1.run_start()->weights.alpha));
  return compare_totals(std::move(name), ledger_total_energy(alpha1), ledger_total_energy(sm2),
                        ledger_total_energy(vanilla));
}

std::string comparison_text(std::span<const ComparisonSummary> rows) {
  std::ostringstream os;
  os << "experiment  alpha=1 (Wh)  sm2 (Wh)  reduction  vanilla (Wh)  parity  parity*\n";
  for (const auto& r : rows)
    os << r.name << "  " << pct(r.energy_alpha1_wh) << "  " << pct(r.energy_sm2_wh) << "  "
       << pct(-r.reduction_pct) << "%  " << pct(r.energy_vanilla_wh) << "  " << pct(r.parity) << "  "
       << pct(r.symmetric_parity) << '\n';
  os << "reduction is relative to alpha=1; parity = sm2 / vanilla; parity* = larger / smaller\n";
  return os.str();
}

std::string comparison_csv(std::span<const ComparisonSummary> rows) {
  std::string s = "experiment,energy_alpha1_wh,energy_sm2_wh,energy_vanilla_wh,reduction_pct,parity,symmetric_parity\n";
  for (const auto& r : rows)
    s += r.name + ',' + format_number(r.energy_alpha1_wh) + ',' + format_number(r.energy_sm2_wh) + ',' +
         format_number(r.energy_vanilla_wh) + ',' + format_number(r.reduction_pct) + ',' +
         format_number(r.parity) + ',' + format_number(r.symmetric_parity) + '\n';
  return s;
}

}  // namespace sm2
