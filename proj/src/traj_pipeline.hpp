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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "geo_profile.hpp"
#include "rq_codebook.hpp"

namespace movetok {

inline constexpr int kSlotMinutes = 30;
inline constexpr int kSlotsPerDay = 24 * 60 / kSlotMinutes;
inline constexpr double kEarthRadiusM = 6371008.8;

struct RawVisit {
  std::string user_id;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  double lat = 0.0;
  double lon = 0.0;
};

struct GridCell {
  int row = 0;
  int col = 0;

  auto operator<=>(const GridCell&) const = default;
};

struct TrajPoint {
  int day = 0;  // offset from the window's first day; derived, not serialized
  int weekday = 0;  // 0 = Monday
  int slot = 0;
  GridCell cell;
  std::optional<LocationTokenSeq> tokens;

  bool operator==(const TrajPoint&) const = default;
};

struct Trajectory {
  std::string user_id;
  std::int64_t window_start_day = 0;  // local days since 1970-01-01
  std::string city;
  std::vector<TrajPoint> points;

  bool operator==(const Trajectory&) const = default;
};

struct CityConfig {
  std::string name = "city";
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  // Latitude fixing the east-west scale. Defaults to origin_lat; keeping it
  // fixed makes origin shifts pure translations of the grid.
  std::optional<double> reference_lat;
  BoundingBox bounds;
  int tz_offset_seconds = 0;

  double scale_lat() const { return reference_lat.value_or(origin_lat); }
  static CityConfig from_json(const Json& j);
  Json to_json() const;
};

struct PipelineConfig {
  double cell_size_m = 500.0;
  int slot_minutes = kSlotMinutes;
  int window_days = 3;
  int stride_days = 1;
  int min_points = 5;
  int max_points = 145;
  bool dedup_consecutive = true;

  void validate() const;
  Json to_json() const;
};

// Equirectangular projection about the city origin.
GridCell assign_grid(double lat, double lon, const CityConfig& city, double cell_size_m = 500.0);

// Inverse of the projection at a cell-relative offset; used to place points.
std::pair<double, double> offset_to_latlon(double north_m, double east_m, const CityConfig& city);

struct TimeBin {
  std::int64_t day = 0;
  int weekday = 0;
  int slot = 0;
};

TimeBin bin_time(std::int64_t timestamp, int tz_offset_seconds);

int weekday_of_day(std::int64_t day);
std::string_view weekday_name(int weekday);
// "Monday 08:30"
std::string format_slot_time(int weekday, int slot);

/// Windows for one user's visits (any order; they are sorted here). One
/// window starts on every day whose window would contain at least one visit.
std::vector<Trajectory> window_trajectories(const std::vector<RawVisit>& user_visits,
                                            const CityConfig& city, const PipelineConfig& cfg);

struct VisitLoadResult {
  std::vector<RawVisit> visits;
  std::vector<LoadDiagnostic> skipped;
};

VisitLoadResult load_raw_visits(const std::filesystem::path& path, bool strict);

struct PreprocessResult {
  std::vector<Trajectory> trajectories;  // ordered by (user_id, window_start_day)
  std::vector<LoadDiagnostic> skipped;    // visits outside the city bounds
};

PreprocessResult preprocess_visits(const std::vector<RawVisit>& visits, const CityConfig& city,
                                   const PipelineConfig& cfg, bool strict);

OrderedJson trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);
std::string trajectories_to_jsonl(const std::vector<Trajectory>& ts);

/// Points of days [first, first + count), re-based so the slice starts on
/// day offset 0.
Trajectory day_slice(const Trajectory& t, int first_day, int day_count);

}  // namespace movetok
