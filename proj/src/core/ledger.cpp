// SPDX-License-Identifier: Apache-2.0
#include "sm2/ledger.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>
#include <string>

#include "sm2/errors.hpp"

namespace sm2 {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::time_t parse_origin(const std::string& origin) {
  std::tm tm{};
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char z = 0;
  if (std::sscanf(origin.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &z) != 7 ||
      z != 'Z') {
    throw ArgumentError("timestamp origin must look like YYYY-MM-DDTHH:MM:SSZ, got '" + origin + "'");
  }
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  return timegm(&tm);
}

ordered_json config_ids_to_json(const std::vector<ConfigId>& ids) {
  ordered_json a = ordered_json::array();
  for (auto id : ids) a.push_back(id.value);
  return a;
}

std::vector<ConfigId> config_ids_from_json(const json& a) {
  std::vector<ConfigId> ids;
  for (const auto& v : a) ids.push_back(ConfigId{v.get<std::uint32_t>()});
  return ids;
}

ordered_json weights_to_json(const ObjectiveWeights& w) {
  ordered_json j;
  j["alpha"] = w.alpha;
  j["beta"] = w.beta;
  return j;
}

ObjectiveWeights weights_from_json(const json& j) {
  return ObjectiveWeights{j.at("alpha").get<double>(), j.at("beta").get<double>()};
}

ordered_json numbers_to_json(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

std::vector<double> numbers_from_json(const json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& x : a) v.push_back(number_from_json(x));
  return v;
}

}  // namespace

ordered_json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw ParseError(0, "expected a number, got " + j.dump());
}

std::string iso_timestamp(const std::string& origin, double offset_s) {
  const auto base = parse_origin(origin);
  const auto total_ms = static_cast<long long>(std::llround(offset_s * 1000.0));
  std::time_t t = base + static_cast<std::time_t>(total_ms / 1000);
  const int ms = static_cast<int>(total_ms % 1000);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
  return buf;
}

std::string event_type(const LedgerEvent& event) {
  return std::visit(overloaded{[](const RunStart&) { return "run_start"; },
                               [](const EpochEnergyRecord&) { return "epoch_energy"; },
                               [](const EpochMetricsRecord&) { return "epoch_metrics"; },
                               [](const HalvingDecision&) { return "halving_decision"; },
                               [](const FinalSelection&) { return "final_selection"; }},
                    event);
}

ordered_json to_json(const LedgerEvent& event, const std::string& origin) {
  ordered_json j;
  j["type"] = event_type(event);
  std::visit(
      overloaded{
          [&](const RunStart& e) {
            j["timestamp"] = iso_timestamp(e.start_time, e.sim_time_s);
            j["sim_time_s"] = e.sim_time_s;
            j["fingerprint"] = e.fingerprint;
            j["mode"] = e.mode;
            j["seed"] = e.seed;
            j["weights"] = weights_to_json(e.weights);
            j["lr_min"] = e.lr_min;
            j["lr_max"] = e.lr_max;
            j["start_time"] = e.start_time;
            ordered_json cs = ordered_json::array();
            for (const auto& c : e.configs) {
              ordered_json cj;
              cj["config_id"] = c.id.value;
              cj["batch_size"] = c.batch_size;
              cj["initial_lr"] = c.initial_lr;
              cs.push_back(std::move(cj));
            }
            j["configs"] = std::move(cs);
          },
          [&](const EpochEnergyRecord& e) {
            j["timestamp"] = iso_timestamp(origin, e.sim_time_s);
            j["sim_time_s"] = e.sim_time_s;
            j["config_id"] = e.config_id.value;
            j["round"] = e.round;
            j["epoch"] = e.epoch_index;
            j["mode"] = to_string(e.mode);
            j["batch_size"] = e.batch_size;
            j["duration_s"] = e.duration_s;
            j["energy_wh"] = e.energy_wh;
            j["power_samples"] = numbers_to_json(e.power_samples);
          },
          [&](const EpochMetricsRecord& e) {
            j["timestamp"] = iso_timestamp(origin, e.sim_time_s);
            j["sim_time_s"] = e.sim_time_s;
            j["config_id"] = e.config_id.value;
            j["round"] = e.round;
            j["epoch"] = e.epoch_index;
            j["mode"] = to_string(e.mode);
            j["performance"] = number_to_json(e.performance);
            j["polarity"] = to_string(e.polarity);
            j["selected_lr"] = e.selected_lr;
            j["diverged"] = e.diverged;
            ordered_json trace = ordered_json::array();
            if (e.exploration) {
              for (const auto& p : e.exploration->losses) {
                trace.push_back(ordered_json::array({p.lr, number_to_json(p.mean_loss)}));
              }
            }
            j["loss_trace"] = std::move(trace);
            if (e.exploration) {
              ordered_json ex;
              ex["curvature"] = numbers_to_json(e.exploration->curvature);
              ex["window_begin"] = e.exploration->window_begin
                                       ? ordered_json(*e.exploration->window_begin)
                                       : ordered_json(nullptr);
              ex["window_end"] = e.exploration->window_end ? ordered_json(*e.exploration->window_end)
                                                           : ordered_json(nullptr);
              ex["fallback"] = e.exploration->fallback;
              j["exploration"] = std::move(ex);
            }
          },
          [&](const HalvingDecision& e) {
            j["timestamp"] = iso_timestamp(origin, e.sim_time_s);
            j["sim_time_s"] = e.sim_time_s;
            j["round"] = e.round;
            j["weights"] = weights_to_json(e.weights);
            ordered_json entries = ordered_json::array();
            for (const auto& en : e.entries) {
              ordered_json ej;
              ej["config_id"] = en.raw.config_id.value;
              ordered_json raw;
              raw["performance"] = number_to_json(en.raw.performance);
              raw["polarity"] = to_string(en.raw.polarity);
              raw["energy_wh"] = number_to_json(en.raw.energy_wh);
              raw["selected_lr"] = en.raw.selected_lr;
              raw["diverged"] = en.raw.diverged;
              ej["raw"] = std::move(raw);
              ordered_json norm;
              norm["P"] = en.normalized.performance;
              norm["E"] = en.normalized.energy;
              norm["LR"] = en.normalized.learning_rate;
              ej["normalized"] = std::move(norm);
              ej["score"] = en.score;
              ej["dropped"] = en.dropped;
              entries.push_back(std::move(ej));
            }
            j["entries"] = std::move(entries);
            j["dropped"] = config_ids_to_json(e.dropped);
            j["tie_breaks"] = e.tie_breaks;
          },
          [&](const FinalSelection& e) {
            j["timestamp"] = iso_timestamp(origin, e.sim_time_s);
            j["sim_time_s"] = e.sim_time_s;
            j["config_id"] = e.config_id.value;
            j["batch_size"] = e.batch_size;
            j["final_lr"] = e.final_lr;
            j["total_epochs"] = e.total_epochs;
            j["total_energy_wh"] = e.total_energy_wh;
            j["truncated"] = e.truncated;
          }},
      event);
  return j;
}

LedgerEvent event_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  const double t = j.at("sim_time_s").get<double>();
  if (type == "run_start") {
    RunStart e;
    e.sim_time_s = t;
    e.fingerprint = j.at("fingerprint").get<std::string>();
    e.mode = j.at("mode").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.weights = weights_from_json(j.at("weights"));
    e.lr_min = j.at("lr_min").get<double>();
    e.lr_max = j.at("lr_max").get<double>();
    e.start_time = j.at("start_time").get<std::string>();
    for (const auto& c : j.at("configs")) {
      e.configs.push_back(ConfigSummary{ConfigId{c.at("config_id").get<std::uint32_t>()},
                                        c.at("batch_size").get<std::size_t>(),
                                        c.at("initial_lr").get<double>()});
    }
    return e;
  }
  if (type == "epoch_energy") {
    EpochEnergyRecord e;
    e.sim_time_s = t;
    e.config_id = ConfigId{j.at("config_id").get<std::uint32_t>()};
    e.round = j.at("round").get<std::uint32_t>();
    e.epoch_index = j.at("epoch").get<std::uint32_t>();
    e.mode = mode_from_string(j.at("mode").get<std::string>());
    e.batch_size = j.at("batch_size").get<std::size_t>();
    e.duration_s = j.at("duration_s").get<double>();
    e.energy_wh = j.at("energy_wh").get<double>();
    e.power_samples = numbers_from_json(j.at("power_samples"));
    return e;
  }
  if (type == "epoch_metrics") {
    EpochMetricsRecord e;
    e.sim_time_s = t;
    e.config_id = ConfigId{j.at("config_id").get<std::uint32_t>()};
    e.round = j.at("round").get<std::uint32_t>();
    e.epoch_index = j.at("epoch").get<std::uint32_t>();
    e.mode = mode_from_string(j.at("mode").get<std::string>());
    e.performance = number_from_json(j.at("performance"));
    e.polarity = polarity_from_string(j.at("polarity").get<std::string>());
    e.selected_lr = j.at("selected_lr").get<double>();
    e.diverged = j.at("diverged").get<bool>();
    if (j.contains("exploration")) {
      ExplorationTrace ex;
      for (const auto& p : j.at("loss_trace")) {
        ex.losses.push_back(LossPoint{p.at(0).get<double>(), number_from_json(p.at(1))});
      }
      const auto& xj = j.at("exploration");
      ex.curvature = numbers_from_json(xj.at("curvature"));
      if (!xj.at("window_begin").is_null()) ex.window_begin = xj.at("window_begin").get<std::size_t>();
      if (!xj.at("window_end").is_null()) ex.window_end = xj.at("window_end").get<std::size_t>();
      ex.fallback = xj.at("fallback").get<bool>();
      e.exploration = std::move(ex);
    }
    return e;
  }
  if (type == "halving_decision") {
    HalvingDecision e;
    e.sim_time_s = t;
    e.round = j.at("round").get<std::uint32_t>();
    e.weights = weights_from_json(j.at("weights"));
    for (const auto& ej : j.at("entries")) {
      HalvingEntry en;
      en.raw.config_id = ConfigId{ej.at("config_id").get<std::uint32_t>()};
      const auto& raw = ej.at("raw");
      en.raw.performance = number_from_json(raw.at("performance"));
      en.raw.polarity = polarity_from_string(raw.at("polarity").get<std::string>());
      en.raw.energy_wh = number_from_json(raw.at("energy_wh"));
      en.raw.selected_lr = raw.at("selected_lr").get<double>();
      en.raw.diverged = raw.at("diverged").get<bool>();
      const auto& norm = ej.at("normalized");
      en.normalized = AttributeVector{en.raw.config_id, norm.at("P").get<double>(),
                                      norm.at("E").get<double>(), norm.at("LR").get<double>()};
      en.score = ej.at("score").get<double>();
      en.dropped = ej.at("dropped").get<bool>();
      e.entries.push_back(std::move(en));
    }
    e.dropped = config_ids_from_json(j.at("dropped"));
    e.tie_breaks = j.at("tie_breaks").get<std::vector<std::string>>();
    return e;
  }
  if (type == "final_selection") {
    FinalSelection e;
    e.sim_time_s = t;
    e.config_id = ConfigId{j.at("config_id").get<std::uint32_t>()};
    e.batch_size = j.at("batch_size").get<std::size_t>();
    e.final_lr = j.at("final_lr").get<double>();
    e.total_epochs = j.at("total_epochs").get<std::uint32_t>();
    e.total_energy_wh = j.at("total_energy_wh").get<double>();
    e.truncated = j.at("truncated").get<bool>();
    return e;
  }
  throw ParseError(0, "unknown ledger event type '" + type + "'");
}

void RunLedger::attach_file(const std::filesystem::path& path) {
  auto f = std::make_unique<std::ofstream>(path, std::ios::out | std::ios::trunc);
  if (!*f) throw IoError("cannot open ledger file " + path.string());
  const RunStart* start = run_start();
  for (const auto& e : events_) {
    *f << to_json(e, start ? start->start_time : std::string{}).dump() << '\n';
  }
  f->flush();
  file_ = std::move(f);
}

void RunLedger::check_progress(ConfigId id, std::uint32_t round, std::uint32_t epoch) const {
  auto it = cursors_.find(id.value);
  if (it == cursors_.end()) return;
  const auto& c = it->second;
  if (c.dropped) {
    throw OrderingError("config " + std::to_string(id.value) + " was dropped; no further events allowed");
  }
  if (c.seen && (round < c.round || (round == c.round && epoch < c.epoch))) {
    throw OrderingError("event (round " + std::to_string(round) + ", epoch " + std::to_string(epoch) +
                        ") precedes (round " + std::to_string(c.round) + ", epoch " +
                        std::to_string(c.epoch) + ") for config " + std::to_string(id.value));
  }
}

void RunLedger::check(const LedgerEvent& event) const {
  if (finished_) throw OrderingError("ledger already holds a final selection");
  if (std::holds_alternative<RunStart>(event)) {
    if (started_) throw OrderingError("run_start may only appear once");
    return;
  }
  if (!started_) throw OrderingError("the first ledger event must be run_start");
  const auto known = [&](ConfigId id) {
    if (!cursors_.contains(id.value)) {
      throw OrderingError("config " + std::to_string(id.value) + " is not part of this run");
    }
  };
  std::visit(overloaded{[](const RunStart&) {},
                        [&](const EpochEnergyRecord& e) {
                          known(e.config_id);
                          e.validate();
                          check_progress(e.config_id, e.round, e.epoch_index);
                        },
                        [&](const EpochMetricsRecord& e) {
                          known(e.config_id);
                          e.validate();
                          check_progress(e.config_id, e.round, e.epoch_index);
                        },
                        [&](const HalvingDecision& e) {
                          if (last_halving_round_ && e.round <= *last_halving_round_) {
                            throw OrderingError("halving round " + std::to_string(e.round) +
                                                " does not follow round " +
                                                std::to_string(*last_halving_round_));
                          }
                          std::set<std::uint32_t> seen;
                          for (auto id : e.dropped) {
                            known(id);
                            if (cursors_.at(id.value).dropped) {
                              throw OrderingError("config " + std::to_string(id.value) +
                                                  " was already dropped");
                            }
                            if (!seen.insert(id.value).second) {
                              throw OrderingError("config " + std::to_string(id.value) +
                                                  " named twice in one halving decision");
                            }
                          }
                        },
                        [&](const FinalSelection& e) {
                          known(e.config_id);
                          if (cursors_.at(e.config_id.value).dropped) {
                            throw OrderingError("a dropped config cannot be the final selection");
                          }
                        }},
             event);
}

void RunLedger::commit(const LedgerEvent& event) {
  std::visit(overloaded{[&](const RunStart& e) {
                          started_ = true;
                          for (const auto& c : e.configs) cursors_[c.id.value] = ConfigCursor{};
                        },
                        [&](const EpochEnergyRecord& e) {
                          auto& c = cursors_[e.config_id.value];
                          c.round = e.round;
                          c.epoch = e.epoch_index;
                          c.seen = true;
                        },
                        [&](const EpochMetricsRecord& e) {
                          auto& c = cursors_[e.config_id.value];
                          c.round = e.round;
                          c.epoch = e.epoch_index;
                          c.seen = true;
                        },
                        [&](const HalvingDecision& e) {
                          last_halving_round_ = e.round;
                          for (auto id : e.dropped) cursors_[id.value].dropped = true;
                        },
                        [&](const FinalSelection&) { finished_ = true; }},
             event);
}

void RunLedger::append(LedgerEvent event) {
  check(event);
  commit(event);
  events_.push_back(std::move(event));
  if (file_) {
    const RunStart* start = run_start();
    *file_ << to_json(events_.back(), start->start_time).dump() << '\n';
    file_->flush();
    if (!*file_) throw IoError("failed writing ledger file");
  }
}

const RunStart* RunLedger::run_start() const {
  if (events_.empty()) return nullptr;
  return std::get_if<RunStart>(&events_.front());
}

const FinalSelection* RunLedger::final_selection() const {
  if (events_.empty()) return nullptr;
  return std::get_if<FinalSelection>(&events_.back());
}

RunLedger RunLedger::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ledger file " + path.string());
  RunLedger ledger;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw ParseError(lineno, ex.what());
    }
    try {
      ledger.append(event_from_json(j));
    } catch (const json::exception& ex) {
      throw ParseError(lineno, ex.what());
    } catch (const OrderingError& ex) {
      throw ParseError(lineno, ex.what());
    }
  }
  return ledger;
}

double ledger_total_energy(const RunLedger& ledger) {
  double total = 0.0;
  for (const auto& e : ledger.events()) {
    if (const auto* r = std::get_if<EpochEnergyRecord>(&e)) total += r->energy_wh;
  }
  return total;
}

std::vector<double> ledger_round_energy(const RunLedger& ledger) {
  std::vector<double> per_round;
  for (const auto& e : ledger.events()) {
    if (const auto* r = std::get_if<EpochEnergyRecord>(&e)) {
      if (per_round.size() <= r->round) per_round.resize(r->round + 1, 0.0);
      per_round[r->round] += r->energy_wh;
    }
  }
  return per_round;
}

}  // namespace sm2
