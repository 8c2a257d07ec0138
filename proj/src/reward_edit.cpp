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

#include "reward_edit.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_set>

namespace movetok {
namespace {

constexpr std::size_t kFrequentSlots = 3;

std::optional<GridCell> frequent_at(const StatFeatureSet& f, std::size_t i) {
  if (i < f.frequent_locations.size()) return f.frequent_locations[i];
  return std::nullopt;
}

std::string location_text(const Location& l) {
  if (l.tokens) return l.tokens->render();
  return "cell_" + std::to_string(l.cell.row) + "_" + std::to_string(l.cell.col);
}

int trajectory_weekday(const Trajectory& t) {
  return t.points.empty() ? weekday_of_day(t.window_start_day) : t.points.front().weekday;
}

std::size_t insertion_point(const std::vector<TrajPoint>& pts, int slot) {
  auto it = std::upper_bound(pts.begin(), pts.end(), slot,
                             [](int s, const TrajPoint& p) { return s < p.slot; });
  return static_cast<std::size_t>(it - pts.begin());
}

TrajPoint make_point(const Trajectory& t, int slot, const Location& loc) {
  TrajPoint p;
  p.day = 0;
  p.weekday = trajectory_weekday(t);
  p.slot = slot;
  p.cell = loc.cell;
  p.tokens = loc.tokens;
  return p;
}

void check_single_day(const Trajectory& t) {
  for (const auto& p : t.points)
    if (p.day != 0) fail(ErrorKind::kData, "refinement works on single-day trajectories");
}

std::vector<int> full_alphabet() {
  std::vector<int> s(kSlotsPerDay);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

std::vector<int> checked_alphabet(const std::vector<int>& a) {
  if (a.empty()) return full_alphabet();
  std::set<int> s(a.begin(), a.end());
  for (int slot : s)
    if (slot < 0 || slot >= kSlotsPerDay) fail(ErrorKind::kUsage, "slot alphabet entry out of range");
  return {s.begin(), s.end()};
}

std::vector<Location> sorted_locations(const std::vector<Location>& allowed) {
  std::map<GridCell, Location> by_cell;
  for (const auto& l : allowed) by_cell.emplace(l.cell, l);
  std::vector<Location> out;
  for (auto& [c, l] : by_cell) out.push_back(l);
  return out;
}

// Every single edit of t in candidate-key order.
template <typename Fn>
void for_each_edit(const Trajectory& t, const std::vector<int>& slots,
                   const std::vector<Location>& locs, Fn&& fn) {
  const std::size_t n = t.points.size();
  for (std::size_t i = 0; i < n; ++i)
    for (int s : slots)
      for (const auto& l : locs) {
        if (t.points[i].slot == s && t.points[i].cell == l.cell) continue;
        fn(EditOp{EditKind::kModify, i, s, l});
      }
  std::vector<std::tuple<std::size_t, int, std::size_t>> adds;
  for (int s : slots)
    for (std::size_t li = 0; li < locs.size(); ++li) adds.emplace_back(insertion_point(t.points, s), s, li);
  std::sort(adds.begin(), adds.end());
  for (const auto& [idx, s, li] : adds) fn(EditOp{EditKind::kAdd, idx, s, locs[li]});
  if (n > 1)
    for (std::size_t i = 0; i < n; ++i) fn(EditOp{EditKind::kDelete, i, 0, Location{}});
}

std::string describe_edit(const Trajectory& before, const EditOp& op) {
  const int wd = trajectory_weekday(before);
  switch (op.kind) {
    case EditKind::kModify: {
      const TrajPoint& p = before.points.at(op.index);
      Location old{p.cell, p.tokens};
      return "modify point " + std::to_string(op.index) + " from " + format_slot_time(p.weekday, p.slot) +
             " at " + location_text(old) + " to " + format_slot_time(wd, op.slot) + " at " +
             location_text(op.location);
    }
    case EditKind::kAdd:
      return "add a visit at " + format_slot_time(wd, op.slot) + " to " + location_text(op.location);
    case EditKind::kDelete: {
      const TrajPoint& p = before.points.at(op.index);
      return "delete point " + std::to_string(op.index) + " (" + format_slot_time(p.weekday, p.slot) +
             " at " + location_text(Location{p.cell, p.tokens}) + ")";
    }
  }
  return {};
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}


// Integer-coded trajectory state used by the refinement search.
struct CPoint {
  int slot;
  int loc;  // index into the matcher's sorted cell list

  auto operator<=>(const CPoint&) const = default;
};
using CState = std::vector<CPoint>;

// Counts mismatches against a fixed target without building feature sets.
class CompactMatcher {
 public:
  CompactMatcher(const PeriodPartition& periods, const StatFeatureSet& target, std::vector<GridCell> cells)
      : cells_(std::move(cells)), target_length_(target.length) {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
    for (int s = 0; s < kSlotsPerDay; ++s) period_of_.push_back(static_cast<int>(periods.period_of(s)));
    n_periods_ = periods.size();
    for (std::size_t i = 0; i < kFrequentSlots; ++i) {
      const auto c = frequent_at(target, i);
      target_frequent_.push_back(c ? id(*c) : -1);
    }
    target_percent_ = target.period_percent;
    for (const auto& list : target.period_frequent) {
      std::vector<int> ids;
      for (const auto& c : list) ids.push_back(id(c));
      target_period_frequent_.push_back(std::move(ids));
    }
  }

  int id(const GridCell& c) const {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), c);
    if (it == cells_.end() || *it != c) fail(ErrorKind::kData, "cell missing from matcher");
    return static_cast<int>(it - cells_.begin());
  }

  int mismatches(const CState& pts) const { return score(pts).first; }

  // (mismatch count, graded gap). The gap sums period-probability differences
  // in 5% steps and the length difference.
  std::pair<int, int> score(const CState& pts) const {
    const std::size_t n_locs = cells_.size();
    const std::size_t n = pts.size();
    count_.assign(n_locs * (n_periods_ + 1), 0);
    first_.assign(n_locs * (n_periods_ + 1), -1);
    period_total_.assign(n_periods_, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto loc = static_cast<std::size_t>(pts[i].loc);
      const auto per = static_cast<std::size_t>(period_of_[static_cast<std::size_t>(pts[i].slot)]);
      ++count_[loc];
      ++count_[(per + 1) * n_locs + loc];
      ++period_total_[per];
      for (const std::size_t slot : {loc, (per + 1) * n_locs + loc})
        if (first_[slot] < 0) first_[slot] = static_cast<int>(i);
    }
    int miss = 0;
    int gap = std::abs(static_cast<int>(n) - target_length_);
    ranked(0, ranked_);
    for (std::size_t i = 0; i < kFrequentSlots; ++i) {
      const int have = i < ranked_.size() ? ranked_[i] : -1;
      if (have != target_frequent_[i]) ++miss;
    }
    for (std::size_t p = 0; p < n_periods_; ++p) {
      const int pct = round_to_five_percent(period_total_[p], n);
      if (pct != target_percent_[p]) ++miss;
      gap += std::abs(pct - target_percent_[p]) / 5;
    }
    for (std::size_t p = 0; p < n_periods_; ++p) {
      ranked(p + 1, ranked_);
      if (ranked_ != target_period_frequent_[p]) ++miss;
    }
    if (static_cast<int>(n) != target_length_) ++miss;
    return {miss, gap};
  }

 private:
  // Locations seen more than once in block b, by count, first visit, cell.
  void ranked(std::size_t block, std::vector<int>& out) const {
    const std::size_t n_locs = cells_.size();
    out.clear();
    for (std::size_t l = 0; l < n_locs; ++l)
      if (count_[block * n_locs + l] > 1) out.push_back(static_cast<int>(l));
    std::sort(out.begin(), out.end(), [&](int a, int b) {
      const int ca = count_[block * n_locs + static_cast<std::size_t>(a)];
      const int cb = count_[block * n_locs + static_cast<std::size_t>(b)];
      if (ca != cb) return ca > cb;
      const int fa = first_[block * n_locs + static_cast<std::size_t>(a)];
      const int fb = first_[block * n_locs + static_cast<std::size_t>(b)];
      if (fa != fb) return fa < fb;
      return a < b;
    });
  }

  std::vector<GridCell> cells_;
  std::vector<int> period_of_;
  std::size_t n_periods_ = 0;
  int target_length_ = 0;
  std::vector<int> target_frequent_;
  std::vector<int> target_percent_;
  std::vector<std::vector<int>> target_period_frequent_;
  mutable std::vector<int> count_;
  mutable std::vector<int> first_;
  mutable std::vector<std::size_t> period_total_;
  mutable std::vector<int> ranked_;
};

std::size_t insertion_point(const CState& pts, int slot) {
  auto it = std::upper_bound(pts.begin(), pts.end(), slot, [](int s, const CPoint& p) { return s < p.slot; });
  return static_cast<std::size_t>(it - pts.begin());
}

struct CEdit {
  EditKind kind;
  std::size_t index;
  int slot;
  int loc;
};

void apply_compact(CState& pts, const CEdit& e) {
  if (e.kind == EditKind::kAdd) {
    pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(e.index), CPoint{e.slot, e.loc});
    return;
  }
  pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(e.index));
  if (e.kind == EditKind::kModify)
    pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(insertion_point(pts, e.slot)), CPoint{e.slot, e.loc});
}

// Candidate edits in key order: modify < add < delete, then index, slot, location.
template <typename Fn>
void for_each_compact_edit(const CState& t, const std::vector<int>& slots, const std::vector<int>& locs,
                           Fn&& fn) {
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i)
    for (int s : slots)
      for (int l : locs)
        if (!(t[i].slot == s && t[i].loc == l)) fn(CEdit{EditKind::kModify, i, s, l});
  std::vector<std::tuple<std::size_t, int, int>> adds;
  for (int s : slots)
    for (int l : locs) adds.emplace_back(insertion_point(t, s), s, l);
  std::sort(adds.begin(), adds.end());
  for (const auto& [idx, s, l] : adds) fn(CEdit{EditKind::kAdd, idx, s, l});
  if (n > 1)
    for (std::size_t i = 0; i < n; ++i) fn(CEdit{EditKind::kDelete, i, 0, -1});
}

struct StepSearch {
  std::vector<CEdit> path;
  bool truncated = false;
};

struct CStateHash {
  std::size_t operator()(const CState& s) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& p : s) {
      h = (h ^ static_cast<std::uint64_t>(p.slot)) * 1099511628211ULL;
      h = (h ^ static_cast<std::uint64_t>(p.loc + 1)) * 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// Shortest edit sequence, up to max_depth, that strictly lowers the mismatch
// count. Within the winning depth the lowest count wins, then the earliest
// sequence in candidate-key order.
StepSearch search_step(const CState& start, const CompactMatcher& matcher, const std::vector<int>& slots,
                       const std::vector<int>& locs, int current, int max_depth, std::size_t node_limit) {
  struct Node {
    CState t;
    std::size_t parent;
    CEdit edit;
  };
  constexpr std::size_t kRoot = static_cast<std::size_t>(-1);
  std::unordered_set<CState, CStateHash> seen{start};
  std::vector<Node> nodes;
  std::vector<std::size_t> frontier;
  std::size_t evaluated = 0;
  StepSearch out;

  for (int depth = 1; depth <= max_depth; ++depth) {
    std::vector<std::size_t> next;
    std::pair<int, int> best{current, std::numeric_limits<int>::max()};
    std::optional<std::pair<std::size_t, CEdit>> winner;
    const std::size_t width = depth == 1 ? 1 : frontier.size();
    for (std::size_t f = 0; f < width; ++f) {
      const std::size_t parent = depth == 1 ? kRoot : frontier[f];
      const CState from = depth == 1 ? start : nodes[parent].t;
      bool stop = false;
      for_each_compact_edit(from, slots, locs, [&](const CEdit& e) {
        if (stop) return;
        CState cand = from;
        apply_compact(cand, e);
        if (!seen.insert(cand).second) return;
        if (++evaluated > node_limit) {
          stop = true;
          return;
        }
        const auto score = matcher.score(cand);
        if (score.first < current && score < best) {
          best = score;
          winner = {parent, e};
        }
        if (depth < max_depth) {
          nodes.push_back(Node{std::move(cand), parent, e});
          next.push_back(nodes.size() - 1);
        }
      });
      if (stop) {
        out.truncated = !winner;
        if (!winner) return out;
        break;
      }
    }
    if (winner) {
      out.path.push_back(winner->second);
      for (std::size_t at = winner->first; at != kRoot; at = nodes[at].parent)
        out.path.push_back(nodes[at].edit);
      std::reverse(out.path.begin(), out.path.end());
      return out;
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

std::size_t feature_count(const PeriodPartition& periods, bool include_length) {
  return kFrequentSlots + 2 * periods.size() + (include_length ? 1 : 0);
}

std::vector<std::string> feature_names(const PeriodPartition& periods, bool include_length) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kFrequentSlots; ++i)
    names.push_back("frequent_location_" + std::to_string(i + 1));
  for (const auto& p : periods.periods) names.push_back("period_prob:" + p.name);
  for (const auto& p : periods.periods) names.push_back("period_frequent:" + p.name);
  if (include_length) names.push_back("length");
  return names;
}

std::vector<bool> feature_matches(const StatFeatureSet& a, const StatFeatureSet& b,
                                  bool include_length) {
  if (a.period_percent.size() != b.period_percent.size())
    fail(ErrorKind::kData, "feature sets use different period partitions");
  std::vector<bool> m;
  for (std::size_t i = 0; i < kFrequentSlots; ++i) m.push_back(frequent_at(a, i) == frequent_at(b, i));
  for (std::size_t j = 0; j < a.period_percent.size(); ++j)
    m.push_back(a.period_percent[j] == b.period_percent[j]);
  for (std::size_t j = 0; j < a.period_frequent.size(); ++j)
    m.push_back(a.period_frequent[j] == b.period_frequent[j]);
  if (include_length) m.push_back(a.length == b.length);
  return m;
}

int mismatch_count(const StatFeatureSet& a, const StatFeatureSet& b, bool include_length) {
  const auto m = feature_matches(a, b, include_length);
  return static_cast<int>(std::count(m.begin(), m.end(), false));
}

RewardBreakdown reward_distribution(const Trajectory& generated, const Trajectory& truth,
                                    const PeriodPartition& periods) {
  if (generated.points.empty() || truth.points.empty())
    fail(ErrorKind::kData, "reward needs non-empty trajectories");
  const auto m = feature_matches(extract_features(generated, periods), extract_features(truth, periods),
                                 false);
  RewardBreakdown r;
  r.feature_count = static_cast<int>(m.size());
  r.matched_features = static_cast<int>(std::count(m.begin(), m.end(), true));
  r.r_distribution = r.matched_features;
  r.total = r.r_distribution;
  return r;
}

double reward_length(std::size_t generated_len, std::size_t truth_len) {
  if (truth_len == 0) fail(ErrorKind::kData, "ground-truth trajectory is empty");
  const double diff = std::abs(static_cast<double>(generated_len) - static_cast<double>(truth_len));
  return diff == 0.0 ? 0.0 : -diff / static_cast<double>(truth_len);
}

RewardBreakdown compute_reward(const Trajectory& generated, const Trajectory& truth,
                               const PeriodPartition& periods) {
  RewardBreakdown r = reward_distribution(generated, truth, periods);
  r.r_length = reward_length(generated.points.size(), truth.points.size());
  r.total = r.r_distribution + r.r_length;
  return r;
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) fail(ErrorKind::kData, "advantages need a group of at least two");
  if (!all_finite(rewards)) fail(ErrorKind::kNumeric, "non-finite reward in group");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd == 0) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

OrderedJson reward_to_json(const RewardBreakdown& r) {
  OrderedJson j;
  j["matched_features"] = r.matched_features;
  j["feature_count"] = r.feature_count;
  j["r_distribution"] = r.r_distribution;
  j["r_length"] = r.r_length;
  j["total"] = r.total;
  return j;
}

std::string_view edit_kind_name(EditKind k) {
  switch (k) {
    case EditKind::kModify:
      return "modify";
    case EditKind::kAdd:
      return "add";
    case EditKind::kDelete:
      return "delete";
  }
  return "unknown";
}

void apply_edit(Trajectory& t, const EditOp& op) {
  auto& pts = t.points;
  if (op.kind != EditKind::kDelete && (op.slot < 0 || op.slot >= kSlotsPerDay))
    fail(ErrorKind::kData, "edit slot out of range");
  switch (op.kind) {
    case EditKind::kAdd: {
      if (op.index != insertion_point(pts, op.slot))
        fail(ErrorKind::kData, "add position " + std::to_string(op.index) + " breaks time order");
      pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(op.index), make_point(t, op.slot, op.location));
      return;
    }
    case EditKind::kDelete:
    case EditKind::kModify: {
      if (op.index >= pts.size()) fail(ErrorKind::kData, "edit index out of range");
      const TrajPoint fresh = make_point(t, op.slot, op.location);
      pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(op.index));
      if (op.kind == EditKind::kModify)
        pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(insertion_point(pts, op.slot)), fresh);
      return;
    }
  }
}

Trajectory apply_edits(const Trajectory& baseline, const std::vector<EditRecord>& edits) {
  Trajectory t = baseline;
  for (const auto& e : edits) apply_edit(t, e.op);
  return t;
}

RefineResult refine_loop(const Trajectory& baseline, const StatFeatureSet& target,
                         const std::vector<Location>& allowed, const PeriodPartition& periods,
                         const RefineOptions& options) {
  if (options.budget < 1) fail(ErrorKind::kUsage, "refinement budget must be at least 1");
  if (baseline.points.empty()) fail(ErrorKind::kData, "baseline trajectory is empty");
  check_single_day(baseline);
  const std::vector<int> slots = checked_alphabet(options.slot_alphabet);
  const std::vector<Location> locs = sorted_locations(allowed);
  const std::vector<std::string> names = feature_names(periods, true);

  RefineResult res;
  res.final = baseline;
  StatFeatureSet current = extract_features(res.final, periods);
  res.initial_mismatches = mismatch_count(current, target, true);

  std::set<GridCell> allowed_cells;
  for (const auto& l : locs) allowed_cells.insert(l.cell);
  std::vector<std::string> unreachable;
  auto note_target = [&](const GridCell& c) {
    if (!allowed_cells.count(c)) unreachable.push_back(target.label(c));
  };
  for (const auto& c : target.frequent_locations) note_target(c);
  for (const auto& list : target.period_frequent)
    for (const auto& c : list) note_target(c);
  std::sort(unreachable.begin(), unreachable.end());
  unreachable.erase(std::unique(unreachable.begin(), unreachable.end()), unreachable.end());

  int mismatches = res.initial_mismatches;
  bool lookahead_truncated = false;

  std::vector<GridCell> universe(allowed_cells.begin(), allowed_cells.end());
  for (const auto& p : baseline.points) universe.push_back(p.cell);
  for (const auto& c : target.frequent_locations) universe.push_back(c);
  for (const auto& list : target.period_frequent) universe.insert(universe.end(), list.begin(), list.end());
  const CompactMatcher matcher(periods, target, universe);
  std::vector<int> loc_ids;
  for (const auto& l : locs) loc_ids.push_back(matcher.id(l.cell));
  CState state;
  for (const auto& p : baseline.points) state.push_back(CPoint{p.slot, matcher.id(p.cell)});
  if (locs.empty() && mismatches > 0) {
    const auto m = feature_matches(current, target, true);
    for (std::size_t k = 0; k < m.size(); ++k)
      if (!m[k] && names[k] != "length" && names[k].rfind("period_prob:", 0) != 0)
        fail(ErrorKind::kData, "no allowed locations to repair " + names[k]);
  }

  while (mismatches > 0 && static_cast<int>(res.edits.size()) < options.budget) {
    ++res.iterations;
    const int depth_cap = std::min(options.lookahead, options.budget - static_cast<int>(res.edits.size()));
    const StepSearch step =
        search_step(state, matcher, slots, loc_ids, mismatches, depth_cap, options.lookahead_node_limit);
    if (step.path.empty()) {
      lookahead_truncated = step.truncated;
      break;
    }
    for (const CEdit& ce : step.path) {
      EditOp op{ce.kind, ce.index, ce.slot, Location{}};
      if (ce.kind != EditKind::kDelete) {
        op.location = *std::find_if(locs.begin(), locs.end(), [&](const Location& l) {
          return matcher.id(l.cell) == ce.loc;
        });
      }
      apply_compact(state, ce);
      Trajectory next = res.final;
      apply_edit(next, op);
      StatFeatureSet f = extract_features(next, periods);
      const int score = mismatch_count(f, target, true);
      if (matcher.mismatches(state) != score)
        fail(ErrorKind::kNumeric, "refinement state diverged from feature extraction");
      const auto before = feature_matches(current, target, true);
      const auto after = feature_matches(f, target, true);
      std::vector<std::string> fixed;
      std::vector<std::string> broken;
      for (std::size_t k = 0; k < names.size(); ++k) {
        if (!before[k] && after[k]) fixed.push_back(names[k]);
        if (before[k] && !after[k]) broken.push_back(names[k]);
      }
      EditRecord rec;
      rec.op = op;
      rec.step = res.iterations;
      rec.mismatches_before = mismatches;
      rec.mismatches_after = score;
      rec.justification = describe_edit(res.final, op);
      if (fixed.empty()) {
        rec.justification += ": prepares the next edit";
        if (!broken.empty()) rec.justification += " and unsettles " + join(broken);
      } else {
        rec.justification += ": aligns " + join(fixed);
        if (!broken.empty()) rec.justification += " at the cost of " + join(broken);
      }
      rec.justification += " (mismatches " + std::to_string(mismatches) + " -> " + std::to_string(score) + ")";
      res.final = std::move(next);
      current = std::move(f);
      mismatches = score;
      res.edits.push_back(std::move(rec));
    }
  }

  res.final_mismatches = mismatches;
  res.satisfied = mismatches == 0;
  if (!res.satisfied) {
    std::vector<std::string> open;
    const auto m = feature_matches(current, target, true);
    for (std::size_t k = 0; k < m.size(); ++k)
      if (!m[k]) open.push_back(names[k]);
    res.diagnostic = "unsatisfied features: " + join(open);
    if (!unreachable.empty()) res.diagnostic += "; target locations outside the allowed set: " + join(unreachable);
    if (static_cast<int>(res.edits.size()) >= options.budget)
      res.diagnostic += "; budget exhausted";
    else if (lookahead_truncated)
      res.diagnostic += "; lookahead node limit reached";
    else
      res.diagnostic += "; no edit sequence within the lookahead improves the match";
  }
  return res;
}

std::vector<int> oracle_slot_alphabet(const Trajectory& baseline, const PeriodPartition& periods) {
  std::set<int> s;
  for (const auto& p : periods.periods) s.insert(p.ranges.front().first);
  for (const auto& p : baseline.points) s.insert(p.slot);
  return {s.begin(), s.end()};
}

std::optional<int> minimal_edit_oracle(const Trajectory& baseline, const StatFeatureSet& target,
                                       const std::vector<Location>& allowed,
                                       const PeriodPartition& periods,
                                       const std::vector<int>& slot_alphabet, int max_depth,
                                       const OracleLimits& limits) {
  if (baseline.points.empty()) fail(ErrorKind::kData, "baseline trajectory is empty");
  if (baseline.points.size() > limits.max_points)
    fail(ErrorKind::kUsage, "oracle baseline exceeds " + std::to_string(limits.max_points) + " points");
  if (allowed.size() > limits.max_locations)
    fail(ErrorKind::kUsage, "oracle location set exceeds " + std::to_string(limits.max_locations));
  if (max_depth < 0 || max_depth > limits.max_depth)
    fail(ErrorKind::kUsage, "oracle depth must lie in [0, " + std::to_string(limits.max_depth) + "]");
  check_single_day(baseline);
  const std::vector<int> slots = checked_alphabet(slot_alphabet);
  const std::vector<Location> locs = sorted_locations(allowed);

  using State = std::vector<std::pair<int, GridCell>>;
  auto state_of = [](const Trajectory& t) {
    State s;
    for (const auto& p : t.points) s.emplace_back(p.slot, p.cell);
    return s;
  };
  std::set<State> seen{state_of(baseline)};
  std::deque<std::pair<Trajectory, int>> queue{{baseline, 0}};
  while (!queue.empty()) {
    auto [t, depth] = std::move(queue.front());
    queue.pop_front();
    if (mismatch_count(extract_features(t, periods), target, true) == 0) return depth;
    if (depth == max_depth) continue;
    for_each_edit(t, slots, locs, [&](const EditOp& op) {
      Trajectory next = t;
      apply_edit(next, op);
      if (seen.insert(state_of(next)).second) queue.emplace_back(std::move(next), depth + 1);
    });
  }
  return std::nullopt;
}

std::vector<Location> collect_allowed_locations(const std::vector<const Trajectory*>& sources,
                                                const StatFeatureSet& target) {
  std::vector<Location> out;
  std::set<GridCell> seen;
  auto add = [&](const GridCell& c, const std::optional<LocationTokenSeq>& tokens) {
    if (seen.insert(c).second) out.push_back(Location{c, tokens});
  };
  auto tokens_for = [&](const GridCell& c) -> std::optional<LocationTokenSeq> {
    if (auto it = target.token_labels.find(c); it != target.token_labels.end()) return it->second;
    return std::nullopt;
  };
  for (const Trajectory* t : sources)
    for (const auto& p : t->points) add(p.cell, p.tokens);
  for (const auto& c : target.frequent_locations) add(c, tokens_for(c));
  for (const auto& list : target.period_frequent)
    for (const auto& c : list) add(c, tokens_for(c));
  return out;
}

OrderedJson edit_to_json(const EditRecord& e) {
  OrderedJson j;
  j["kind"] = edit_kind_name(e.op.kind);
  j["index"] = e.op.index;
  if (e.op.kind != EditKind::kDelete) {
    j["slot"] = e.op.slot;
    j["row"] = e.op.location.cell.row;
    j["col"] = e.op.location.cell.col;
    if (e.op.location.tokens) j["tokens"] = e.op.location.tokens->render();
  }
  j["step"] = e.step;
  j["mismatches_before"] = e.mismatches_before;
  j["mismatches_after"] = e.mismatches_after;
  j["justification"] = e.justification;
  return j;
}

OrderedJson refine_result_to_json(const RefineResult& r) {
  OrderedJson j;
  j["satisfied"] = r.satisfied;
  j["iterations"] = r.iterations;
  j["initial_mismatches"] = r.initial_mismatches;
  j["final_mismatches"] = r.final_mismatches;
  OrderedJson edits = OrderedJson::array();
  for (const auto& e : r.edits) edits.push_back(edit_to_json(e));
  j["edits"] = std::move(edits);
  j["final"] = trajectory_to_json(r.final);
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  return j;
}

}  // namespace movetok
