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

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common.hpp"
#include "traj_pipeline.hpp"

namespace movetok {

struct TimePeriod {
  std::string name;
  std::vector<std::pair<int, int>> ranges;  // half-open slot ranges

  bool contains(int slot) const;
  std::string describe() const;  // "night (22:00-06:00)"
};

struct PeriodPartition {
  std::vector<TimePeriod> periods;

  // night 22:00-06:00, morning 06:00-12:00, afternoon 12:00-18:00,
  // evening 18:00-22:00.
  static PeriodPartition standard();
  static PeriodPartition from_json(const Json& j);
  Json to_json() const;

  void validate() const;  // periods must cover every slot exactly once
  std::size_t period_of(int slot) const;
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t size() const { return periods.size(); }
};

struct StatFeatureSet {
  std::vector<GridCell> frequent_locations;  // at most 3, each seen more than once
  std::vector<int> period_percent;           // rounded to multiples of 5
  std::vector<double> period_raw;            // unrounded, sums to 1
  std::vector<std::vector<GridCell>> period_frequent;
  int length = 0;
  std::map<GridCell, LocationTokenSeq> token_labels;  // for rendering

  std::string label(const GridCell& c) const;
};

/// Statistical features of a trajectory. Location ranking is by visit count,
/// then earlier first visit, then cell order.
StatFeatureSet extract_features(const Trajectory& t, const PeriodPartition& periods);

// Round-half-up of count / total to a multiple of 5 percent, exactly.
int round_to_five_percent(std::size_t count, std::size_t total);

// Locations ranked as in extract_features, without the "more than once" cut.
std::vector<GridCell> ranked_locations(const std::vector<TrajPoint>& points);

enum class SummaryHeading {
  kFeatures,     // "Summary of the spatio-temporal trajectory features:"
  kPreferences,  // "Summary of the trajectory preferences for this user:"
};

struct SummaryOptions {
  SummaryHeading heading = SummaryHeading::kFeatures;
  bool include_period_frequent = true;
};

std::string render_summary(const StatFeatureSet& f, const PeriodPartition& periods,
                           const SummaryOptions& options = {});

OrderedJson features_to_json(const StatFeatureSet& f, const PeriodPartition& periods);

enum class ScenarioLabel {
  kLateNightCommuter,
  kTempPlanNew,
  kTempPlanCancelled,
  kWeekendUser,
};

std::string_view scenario_name(ScenarioLabel l);

/// Scenario cohorts for a two-day history followed by a one-day future. The
/// night share is taken over all trips of the three days.
std::set<ScenarioLabel> classify_scenario(const Trajectory& history, const Trajectory& future,
                                          const PeriodPartition& periods);

}  // namespace movetok
