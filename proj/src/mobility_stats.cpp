// Copyright 2026 The MoveTok Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mobility_stats.hpp"

#include <algorithm>
#include <cstdio>

namespace movetok {
namespace {

std::string clock(int slot) {
  const int minutes = slot * kSlotMinutes;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

std::string join_labels(const StatFeatureSet& f, const std::vector<GridCell>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ", ";
    out += f.label(cells[i]);
  }
  return out;
}

OrderedJson cells_json(const std::vector<GridCell>& cells) {
  OrderedJson a = OrderedJson::array();
  for (const auto& c : cells) a.push_back({c.row, c.col});
  return a;
}

}  // namespace

bool TimePeriod::contains(int slot) const {
  return std::any_of(ranges.begin(), ranges.end(),
                     [slot](const auto& r) { return slot >= r.first && slot < r.second; });
}

std::string TimePeriod::describe() const {
  std::vector<std::pair<int, int>> r = ranges;
  std::sort(r.begin(), r.end());
  // A period that wraps midnight is stored as [a, 48) and [0, b).
  if (r.size() == 2 && r[0].first == 0 && r[1].second == kSlotsPerDay)
    return name + " (" + clock(r[1].first) + "-" + clock(r[0].second) + ")";
  std::string span;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) span += ", ";
    span += clock(r[i].first) + "-" + (r[i].second == kSlotsPerDay ? "24:00" : clock(r[i].second));
  }
  return name + " (" + span + ")";
}

PeriodPartition PeriodPartition::standard() {
  return {{{"night", {{44, 48}, {0, 12}}},
           {"morning", {{12, 24}}},
           {"afternoon", {{24, 36}}},
           {"evening", {{36, 44}}}}};
}

PeriodPartition PeriodPartition::from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorKind::kUsage, "period partition must be an array");
  PeriodPartition p;
  for (const Json& e : j) {
    TimePeriod t;
    t.name = e.at("name").get<std::string>();
    for (const Json& r : e.at("ranges")) t.ranges.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
    p.periods.push_back(std::move(t));
  }
  p.validate();
  return p;
}

Json PeriodPartition::to_json() const {
  Json a = Json::array();
  for (const auto& t : periods) {
    Json ranges = Json::array();
    for (const auto& r : t.ranges) ranges.push_back({r.first, r.second});
    a.push_back({{"name", t.name}, {"ranges", ranges}});
  }
  return a;
}

void PeriodPartition::validate() const {
  if (periods.empty()) fail(ErrorKind::kUsage, "period partition is empty");
  std::vector<int> cover(kSlotsPerDay, 0);
  std::set<std::string> names;
  for (const auto& t : periods) {
    if (!names.insert(t.name).second) fail(ErrorKind::kUsage, "duplicate period name " + t.name);
    for (const auto& [a, b] : t.ranges) {
      if (a < 0 || b > kSlotsPerDay || a >= b)
        fail(ErrorKind::kUsage, "invalid slot range in period " + t.name);
      for (int s = a; s < b; ++s) ++cover[static_cast<std::size_t>(s)];
    }
  }
  for (int s = 0; s < kSlotsPerDay; ++s) {
    if (cover[static_cast<std::size_t>(s)] != 1)
      fail(ErrorKind::kUsage, "periods must cover slot " + std::to_string(s) + " exactly once");
  }
}

std::size_t PeriodPartition::period_of(int slot) const {
  for (std::size_t i = 0; i < periods.size(); ++i)
    if (periods[i].contains(slot)) return i;
  fail(ErrorKind::kData, "slot " + std::to_string(slot) + " is in no period");
}

std::optional<std::size_t> PeriodPartition::find(std::string_view name) const {
  for (std::size_t i = 0; i < periods.size(); ++i)
    if (periods[i].name == name) return i;
  return std::nullopt;
}

std::string StatFeatureSet::label(const GridCell& c) const {
  if (auto it = token_labels.find(c); it != token_labels.end()) return it->second.render();
  return "cell_" + std::to_string(c.row) + "_" + std::to_string(c.col);
}

int round_to_five_percent(std::size_t count, std::size_t total) {
  if (total == 0) return 0;
  // floor(20 * count / total + 1/2) in integers.
  const std::size_t units = (40 * count + total) / (2 * total);
  return static_cast<int>(units * 5);
}

std::vector<GridCell> ranked_locations(const std::vector<TrajPoint>& points) {
  struct Stat {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::map<GridCell, Stat> stats;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto [it, fresh] = stats.try_emplace(points[i].cell, Stat{0, i});
    ++it->second.count;
  }
  std::vector<std::pair<GridCell, Stat>> v(stats.begin(), stats.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    if (a.second.first != b.second.first) return a.second.first < b.second.first;
    return a.first < b.first;
  });
  std::vector<GridCell> out;
  for (const auto& [cell, s] : v) out.push_back(cell);
  return out;
}

StatFeatureSet extract_features(const Trajectory& t, const PeriodPartition& periods) {
  if (t.points.empty()) fail(ErrorKind::kData, "cannot extract features of an empty trajectory");
  StatFeatureSet f;
  f.length = static_cast<int>(t.points.size());

  auto frequent = [](const std::vector<TrajPoint>& pts) {
    std::map<GridCell, std::size_t> counts;
    for (const auto& p : pts) ++counts[p.cell];
    std::vector<GridCell> out;
    for (const auto& c : ranked_locations(pts))
      if (counts[c] > 1) out.push_back(c);
    return out;
  };

  f.frequent_locations = frequent(t.points);
  if (f.frequent_locations.size() > 3) f.frequent_locations.resize(3);

  std::vector<std::vector<TrajPoint>> by_period(periods.size());
  for (const auto& p : t.points) {
    by_period[periods.period_of(p.slot)].push_back(p);
    if (p.tokens) f.token_labels.emplace(p.cell, *p.tokens);
  }
  const std::size_t total = t.points.size();
  for (const auto& pts : by_period) {
    f.period_raw.push_back(static_cast<double>(pts.size()) / static_cast<double>(total));
    f.period_percent.push_back(round_to_five_percent(pts.size(), total));
    f.period_frequent.push_back(frequent(pts));
  }
  return f;
}

std::string render_summary(const StatFeatureSet& f, const PeriodPartition& periods,
                           const SummaryOptions& options) {
  std::string out = options.heading == SummaryHeading::kFeatures
                        ? "Summary of the spatio-temporal trajectory features:\n"
                        : "Summary of the trajectory preferences for this user:\n";
  out += "- Most frequently visited locations (visited more than once): ";
  out += f.frequent_locations.empty() ? "None" : join_labels(f, f.frequent_locations);
  out += "\n- Probability of visits by time period (rounded to 5%): ";
  for (std::size_t i = 0; i < periods.size(); ++i) {
    if (i) out += ", ";
    out += periods.periods[i].describe() + ": " + std::to_string(f.period_percent.at(i)) + "%";
  }
  if (options.include_period_frequent) {
    out += "\n- Frequently visited locations during each time period: ";
    for (std::size_t i = 0; i < periods.size(); ++i) {
      if (i) out += "; ";
      const auto& cells = f.period_frequent.at(i);
      out += periods.periods[i].name + ": " +
             (cells.empty() ? "No location was visited more than once" : join_labels(f, cells));
    }
  }
  return out;
}

OrderedJson features_to_json(const StatFeatureSet& f, const PeriodPartition& periods) {
  OrderedJson j;
  j["length"] = f.length;
  j["frequent_locations"] = cells_json(f.frequent_locations);
  OrderedJson probs = OrderedJson::object();
  OrderedJson raw = OrderedJson::object();
  OrderedJson freq = OrderedJson::object();
  for (std::size_t i = 0; i < periods.size(); ++i) {
    const std::string& name = periods.periods[i].name;
    probs[name] = f.period_percent[i] / 100.0;
    raw[name] = f.period_raw[i];
    freq[name] = cells_json(f.period_frequent[i]);
  }
  j["period_probs"] = std::move(probs);
  j["period_probs_raw"] = std::move(raw);
  j["period_frequent"] = std::move(freq);
  return j;
}

std::string_view scenario_name(ScenarioLabel l) {
  switch (l) {
    case ScenarioLabel::kLateNightCommuter:
      return "late_night_commuter";
    case ScenarioLabel::kTempPlanNew:
      return "temp_plan_new";
    case ScenarioLabel::kTempPlanCancelled:
      return "temp_plan_cancelled";
    case ScenarioLabel::kWeekendUser:
      return "weekend_user";
  }
  return "none";
}

std::set<ScenarioLabel> classify_scenario(const Trajectory& history, const Trajectory& future,
                                          const PeriodPartition& periods) {
  if (future.window_start_day != history.window_start_day + 2)
    fail(ErrorKind::kData, "future window must start the day after a two-day history");
  for (const auto& p : history.points)
    if (p.day < 0 || p.day > 1) fail(ErrorKind::kData, "history spans more than two days");
  for (const auto& p : future.points)
    if (p.day != 0) fail(ErrorKind::kData, "future spans more than one day");
  const auto night = periods.find("night");
  if (!night) fail(ErrorKind::kUsage, "period partition has no 'night' period");

  std::set<ScenarioLabel> labels;
  std::size_t total = 0;
  std::size_t at_night = 0;
  for (const auto* t : {&history, &future}) {
    for (const auto& p : t->points) {
      ++total;
      if (periods.periods[*night].contains(p.slot)) ++at_night;
    }
  }
  // Strictly more than three quarters, in integers.
  if (total > 0 && 4 * at_night > 3 * total) labels.insert(ScenarioLabel::kLateNightCommuter);

  std::vector<GridCell> top = ranked_locations(history.points);
  if (top.size() > 3) top.resize(3);
  std::set<GridCell> top_set(top.begin(), top.end());
  std::set<GridCell> future_cells;
  for (const auto& p : future.points) future_cells.insert(p.cell);
  if (!future.points.empty() && !history.points.empty()) {
    for (const auto& c : future_cells) {
      if (!top_set.count(c)) {
        labels.insert(ScenarioLabel::kTempPlanNew);
        break;
      }
    }
    for (const auto& c : top) {
      if (!future_cells.count(c)) {
        labels.insert(ScenarioLabel::kTempPlanCancelled);
        break;
      }
    }
  }

  const int start = weekday_of_day(history.window_start_day);
  bool day0 = false;
  bool day1 = false;
  for (const auto& p : history.points) (p.day == 0 ? day0 : day1) = true;
  constexpr int kThursday = 3;
  if (start == kThursday && day0 && day1 && !future.points.empty())
    labels.insert(ScenarioLabel::kWeekendUser);
  return labels;
}

}  // namespace movetok
