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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "mobility_stats.hpp"
#include "traj_pipeline.hpp"

namespace movetok {

/// Feature components compared by the reward: three frequent-location
/// slots, one rounded probability per period, one frequent list per period,
/// and optionally the trajectory length.
std::size_t feature_count(const PeriodPartition& periods, bool include_length);
std::vector<std::string> feature_names(const PeriodPartition& periods, bool include_length);
std::vector<bool> feature_matches(const StatFeatureSet& a, const StatFeatureSet& b,
                                  bool include_length);
int mismatch_count(const StatFeatureSet& a, const StatFeatureSet& b, bool include_length);

struct RewardBreakdown {
  int matched_features = 0;
  int feature_count = 0;
  double r_distribution = 0;
  double r_length = 0;
  double total = 0;
};

RewardBreakdown reward_distribution(const Trajectory& generated, const Trajectory& truth,
                                    const PeriodPartition& periods);
double reward_length(std::size_t generated_len, std::size_t truth_len);
RewardBreakdown compute_reward(const Trajectory& generated, const Trajectory& truth,
                               const PeriodPartition& periods);

/// (r - mean) / population std; all zeros when the std vanishes.
std::vector<double> group_advantages(std::span<const double> rewards);

OrderedJson reward_to_json(const RewardBreakdown& r);

struct Location {
  GridCell cell;
  std::optional<LocationTokenSeq> tokens;

  friend bool operator==(const Location& a, const Location& b) { return a.cell == b.cell; }
};

enum class EditKind { kModify = 0, kAdd = 1, kDelete = 2 };

std::string_view edit_kind_name(EditKind k);

struct EditOp {
  EditKind kind = EditKind::kModify;
  std::size_t index = 0;  // target point for modify/delete, insertion position for add
  int slot = 0;           // unused for delete
  Location location;      // unused for delete
};

/// Applies one edit. Points stay sorted by slot: an added point must land at
/// its upper-bound position, and a modified point is removed and reinserted
/// at the upper bound of its new slot.
void apply_edit(Trajectory& t, const EditOp& op);

struct EditRecord {
  EditOp op;
  int step = 0;  // loop iteration that applied the edit
  int mismatches_before = 0;
  int mismatches_after = 0;
  std::string justification;
};

struct RefineOptions {
  int budget = 10;
  std::vector<int> slot_alphabet;  // empty means all slots
  // Longest edit sequence searched when no single edit improves. 1 disables
  // the search.
  int lookahead = 3;
  std::size_t lookahead_node_limit = 2000000;
};

struct RefineResult {
  Trajectory final;
  std::vector<EditRecord> edits;
  int iterations = 0;
  bool satisfied = false;
  int initial_mismatches = 0;
  int final_mismatches = 0;
  std::string diagnostic;
};

/// Greedy minimal-edit refinement of a single-day trajectory toward target
/// features. Each iteration applies the single edit with the fewest remaining
/// mismatches, provided it strictly improves. When none does, the shortest
/// edit sequence up to the lookahead depth that strictly improves is applied
/// instead.
RefineResult refine_loop(const Trajectory& baseline, const StatFeatureSet& target,
                         const std::vector<Location>& allowed, const PeriodPartition& periods,
                         const RefineOptions& options = {});

Trajectory apply_edits(const Trajectory& baseline, const std::vector<EditRecord>& edits);

struct OracleLimits {
  std::size_t max_points = 6;
  std::size_t max_locations = 5;
  int max_depth = 3;
};

/// Exact minimum number of edits reaching a full feature match, by
/// breadth-first search. Returns nullopt when none exists within max_depth.
std::optional<int> minimal_edit_oracle(const Trajectory& baseline, const StatFeatureSet& target,
                                       const std::vector<Location>& allowed,
                                       const PeriodPartition& periods,
                                       const std::vector<int>& slot_alphabet, int max_depth = 3,
                                       const OracleLimits& limits = {});

// First slot of each period plus the baseline's own slots, sorted.
std::vector<int> oracle_slot_alphabet(const Trajectory& baseline, const PeriodPartition& periods);

// Distinct locations of the given trajectories and target features, in first-seen order.
std::vector<Location> collect_allowed_locations(const std::vector<const Trajectory*>& sources,
                                                const StatFeatureSet& target);

OrderedJson edit_to_json(const EditRecord& e);
OrderedJson refine_result_to_json(const RefineResult& r);

}  // namespace movetok
