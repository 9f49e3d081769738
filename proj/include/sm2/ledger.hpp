// SPDX-License-Identifier: Apache-2.0
#pragma once
// Append-only run ledger and its JSON-lines encoding.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sm2/types.hpp"

namespace sm2 {

// Ordered, append-only event log. Every append is validated against the
// ordering and lifecycle rules:
//  - RunStart comes first and only once;
//  - per configuration, (round, epoch_index) never goes backwards;
//  - halving rounds strictly increase and only name live configurations;
//  - nothing is recorded for a configuration after it was dropped;
//  - FinalSelection is the last event and names a live configuration.
// When a file is attached, each event is written as one JSON line and flushed.
class RunLedger {
 public:
  RunLedger() = default;
  RunLedger(RunLedger&&) noexcept = default;
  RunLedger& operator=(RunLedger&&) noexcept = default;

  // Starts mirroring appends to `path` (truncated). Already-appended events
  // are written first.
  void attach_file(const std::filesystem::path& path);

  void append(LedgerEvent event);

  std::span<const LedgerEvent> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  const RunStart* run_start() const;
  const FinalSelection* final_selection() const;

  // Loads a JSON-lines ledger, replaying every event through append().
  static RunLedger read(const std::filesystem::path& path);

 private:
  struct ConfigCursor {
    std::uint32_t round = 0;
    std::uint32_t epoch = 0;
    bool seen = false;
    bool dropped = false;
  };

  void check(const LedgerEvent& event) const;
  void commit(const LedgerEvent& event);
  void check_progress(ConfigId id, std::uint32_t round, std::uint32_t epoch) const;

  std::vector<LedgerEvent> events_;
  std::map<std::uint32_t, ConfigCursor> cursors_;
  std::optional<std::uint32_t> last_halving_round_;
  bool started_ = false;
  bool finished_ = false;
  std::unique_ptr<std::ofstream> file_;
};

// Sum of energy_wh over every energy record, exploratory and thorough alike.
double ledger_total_energy(const RunLedger& ledger);

// Energy per round, indexed by round number.
std::vector<double> ledger_round_energy(const RunLedger& ledger);

// ISO-8601 UTC timestamp ("YYYY-MM-DDTHH:MM:SS.mmmZ") for `origin` plus
// `offset_s` seconds. `origin` must itself be of the form YYYY-MM-DDTHH:MM:SSZ.
std::string iso_timestamp(const std::string& origin, double offset_s);

nlohmann::ordered_json to_json(const LedgerEvent& event, const std::string& time_origin);
LedgerEvent event_from_json(const nlohmann::json& j);

// Non-finite doubles are written as the strings "inf", "-inf" and "nan".
nlohmann::ordered_json number_to_json(double v);
double number_from_json(const nlohmann::json& j);

std::string event_type(const LedgerEvent& event);

}  // namespace sm2
