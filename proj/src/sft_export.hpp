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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "mobility_stats.hpp"
#include "reward_edit.hpp"
#include "token_align.hpp"
#include "traj_pipeline.hpp"

namespace movetok {

using WindowKey = std::pair<std::string, std::int64_t>;  // (user_id, window_start_day)

// "At Monday 08:30, visited location <a_1><b_2><c_3><d_4>" per point, joined by "; ".
std::string trajectory_text(const Trajectory& t);

// Line-delimited {user_id, window_start_day, values}.
std::map<WindowKey, std::vector<double>> load_sequence_embeddings(const std::filesystem::path& path);

std::string prediction_template();
std::string generation_template();
std::string reflection_template();
std::string reasoning_preamble();

/// Understanding + prediction sample: every point but the last is context and
/// the last point's location is the answer.
InstructionRecord prediction_record(const Trajectory& t, const PeriodPartition& periods,
                                    const std::optional<std::vector<double>>& embedding);

/// Understanding + generation sample: two history days and the next day as
/// the answer. Returns nullopt when either part is empty.
std::optional<InstructionRecord> generation_record(const Trajectory& t, const PeriodPartition& periods,
                                                   const std::optional<std::vector<double>>& embedding);

struct ReflectionSample {
  InstructionRecord record;
  RefineResult refine;
  Trajectory baseline;
  std::set<ScenarioLabel> scenarios;
};

// The history's second day moved onto the future day.
Trajectory shifted_baseline(const Trajectory& history, const Trajectory& future);

/// Self-reflection sample for a three-day window. The baseline defaults to
/// shifted_baseline. Returns nullopt when history, future or baseline is empty.
std::optional<ReflectionSample> reflection_record(const Trajectory& t, const PeriodPartition& periods,
                                                  const std::optional<Trajectory>& baseline,
                                                  const RefineOptions& options);

}  // namespace movetok
