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

#include "traj_pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

namespace movetok {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool in_bounds(double lat, double lon, const BoundingBox& b) {
  return lat >= b.min_lat && lat <= b.max_lat && lon >= b.min_lon && lon <= b.max_lon;
}

double json_number(const Json& j, const char* key, const std::string& at) {
  if (!j.contains(key) || !j[key].is_number())
    fail(ErrorKind::kData, at + "missing or non-numeric field '" + key + "'");
  return j[key].get<double>();
}

int json_int(const Json& j, const char* key, const std::string& at) {
  if (!j.contains(key) || !j[key].is_number_integer())
    fail(ErrorKind::kData, at + "missing or non-integer field '" + key + "'");
  return j[key].get<int>();
}

}  // namespace

CityConfig CityConfig::from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::kUsage, "city config must be a JSON object");
  const std::string at = "city config: ";
  CityConfig c;
  if (j.contains("name")) c.name = j["name"].get<std::string>();
  c.origin_lat = json_number(j, "origin_lat", at);
  c.origin_lon = json_number(j, "origin_lon", at);
  if (j.contains("reference_lat") && !j["reference_lat"].is_null())
    c.reference_lat = json_number(j, "reference_lat", at);
  if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4)
    fail(ErrorKind::kUsage, at + "bbox must be [min_lat, max_lat, min_lon, max_lon]");
  const Json& b = j["bbox"];
  c.bounds = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  if (j.contains("tz_offset_seconds")) c.tz_offset_seconds = j["tz_offset_seconds"].get<int>();
  if (!(c.bounds.min_lat <= c.bounds.max_lat && c.bounds.min_lon <= c.bounds.max_lon))
    fail(ErrorKind::kUsage, at + "bbox minimum exceeds maximum");
  return c;
}

Json CityConfig::to_json() const {
  Json j;
  j["name"] = name;
  j["origin_lat"] = origin_lat;
  j["origin_lon"] = origin_lon;
  if (reference_lat) j["reference_lat"] = *reference_lat;
  j["bbox"] = {bounds.min_lat, bounds.max_lat, bounds.min_lon, bounds.max_lon};
  j["tz_offset_seconds"] = tz_offset_seconds;
  return j;
}

void PipelineConfig::validate() const {
  if (!(cell_size_m > 0.0)) fail(ErrorKind::kUsage, "cell size must be positive");
  if (slot_minutes != kSlotMinutes)
    fail(ErrorKind::kUsage, "only " + std::to_string(kSlotMinutes) + "-minute slots are supported");
  if (window_days < 1) fail(ErrorKind::kUsage, "window length must be at least one day");
  if (window_days > 7) fail(ErrorKind::kUsage, "windows longer than 7 days are not supported");
  if (stride_days < 1) fail(ErrorKind::kUsage, "window stride must be at least one day");
  if (min_points < 1) fail(ErrorKind::kUsage, "min points must be at least 1");
  if (max_points < min_points) fail(ErrorKind::kUsage, "max points must be at least min points");
}

Json PipelineConfig::to_json() const {
  Json j;
  j["cell_size_m"] = cell_size_m;
  j["slot_minutes"] = slot_minutes;
  j["window_days"] = window_days;
  j["stride_days"] = stride_days;
  j["min_points"] = min_points;
  j["max_points"] = max_points;
  j["dedup_consecutive"] = dedup_consecutive;
  return j;
}

GridCell assign_grid(double lat, double lon, const CityConfig& city, double cell_size_m) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || !in_bounds(lat, lon, city.bounds)) {
    fail(ErrorKind::kData, "point (" + format_double(lat) + ", " + format_double(lon) +
                               ") is outside the bounding box of " + city.name);
  }
  const double north = kEarthRadiusM * (lat - city.origin_lat) * kDegToRad;
  const double east =
      kEarthRadiusM * std::cos(city.scale_lat() * kDegToRad) * (lon - city.origin_lon) * kDegToRad;
  return {static_cast<int>(std::floor(north / cell_size_m)),
          static_cast<int>(std::floor(east / cell_size_m))};
}

std::pair<double, double> offset_to_latlon(double north_m, double east_m, const CityConfig& city) {
  const double lat = city.origin_lat + north_m / kEarthRadiusM / kDegToRad;
  const double lon = city.origin_lon +
                     east_m / (kEarthRadiusM * std::cos(city.scale_lat() * kDegToRad)) / kDegToRad;
  return {lat, lon};
}

int weekday_of_day(std::int64_t day) {
  // 1970-01-01 was a Thursday.
  return static_cast<int>(((day % 7) + 7 + 3) % 7);
}

std::string_view weekday_name(int weekday) {
  static constexpr std::array<std::string_view, 7> kNames = {
      "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"};
  return kNames.at(static_cast<std::size_t>(weekday));
}

std::string format_slot_time(int weekday, int slot) {
  const int minutes = slot * kSlotMinutes;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", minutes / 60, minutes % 60);
  return std::string(weekday_name(weekday)) + " " + buf;
}

TimeBin bin_time(std::int64_t timestamp, int tz_offset_seconds) {
  const std::int64_t local = timestamp + tz_offset_seconds;
  TimeBin b;
  b.day = floor_div(local, kSecondsPerDay);
  const std::int64_t second_of_day = local - b.day * kSecondsPerDay;
  b.slot = static_cast<int>(second_of_day / (kSlotMinutes * 60));
  b.weekday = weekday_of_day(b.day);
  return b;
}

std::vector<Trajectory> window_trajectories(const std::vector<RawVisit>& user_visits,
                                            const CityConfig& city, const PipelineConfig& cfg) {
  cfg.validate();
  if (user_visits.empty()) return {};
  std::vector<RawVisit> visits = user_visits;
  std::stable_sort(visits.begin(), visits.end(),
                   [](const RawVisit& a, const RawVisit& b) { return a.timestamp < b.timestamp; });

  struct Binned {
    std::int64_t day;
    TrajPoint point;
  };
  std::vector<Binned> binned;
  for (const RawVisit& v : visits) {
    const TimeBin t = bin_time(v.timestamp, city.tz_offset_seconds);
    TrajPoint p;
    p.weekday = t.weekday;
    p.slot = t.slot;
    p.cell = assign_grid(v.lat, v.lon, city, cfg.cell_size_m);
    if (cfg.dedup_consecutive && !binned.empty() && binned.back().day == t.day &&
        binned.back().point.slot == p.slot && binned.back().point.cell == p.cell) {
      continue;
    }
    binned.push_back({t.day, p});
  }

  const std::int64_t first = binned.front().day;
  const std::int64_t last = binned.back().day;
  std::vector<Trajectory> out;
  for (std::int64_t start = first - cfg.window_days + 1; start <= last; start += cfg.stride_days) {
    const std::int64_t end = start + cfg.window_days;
    Trajectory t;
    t.user_id = visits.front().user_id;
    t.window_start_day = start;
    t.city = city.name;
    for (const Binned& b : binned) {
      if (b.day < start || b.day >= end) continue;
      TrajPoint p = b.point;
      p.day = static_cast<int>(b.day - start);
      t.points.push_back(p);
    }
    if (static_cast<int>(t.points.size()) < cfg.min_points) continue;
    if (static_cast<int>(t.points.size()) > cfg.max_points) {
      t.points.erase(t.points.begin(), t.points.end() - cfg.max_points);
    }
    out.push_back(std::move(t));
  }
  return out;
}

VisitLoadResult load_raw_visits(const std::filesystem::path& path, bool strict) {
  VisitLoadResult result;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    const std::string at = path.string() + ":" + std::to_string(line) + ": ";
    try {
      if (!j.is_object()) fail(ErrorKind::kData, "record is not an object");
      RawVisit v;
      if (j.contains("user_id") && j["user_id"].is_string()) {
        v.user_id = j["user_id"].get<std::string>();
      } else if (j.contains("user_id") && j["user_id"].is_number_integer()) {
        v.user_id = std::to_string(j["user_id"].get<std::int64_t>());
      } else {
        fail(ErrorKind::kData, "missing user_id");
      }
      const double ts = json_number(j, "timestamp", "");
      if (!std::isfinite(ts)) fail(ErrorKind::kData, "non-finite timestamp");
      v.timestamp = static_cast<std::int64_t>(std::floor(ts));
      v.lat = json_number(j, "lat", "");
      v.lon = json_number(j, "lon", "");
      if (!(v.lat >= -90.0 && v.lat <= 90.0)) fail(ErrorKind::kData, "lat out of range");
      if (!(v.lon >= -180.0 && v.lon <= 180.0)) fail(ErrorKind::kData, "lon out of range");
      result.visits.push_back(std::move(v));
    } catch (const Error& e) {
      if (strict) fail(e.kind(), at + e.what());
      result.skipped.push_back({line, at + e.what()});
    }
  }, strict ? std::function<void(std::size_t, const std::string&)>{} : [&](std::size_t line, const std::string& msg) {
    result.skipped.push_back({line, msg});
  });
  return result;
}

PreprocessResult preprocess_visits(const std::vector<RawVisit>& visits, const CityConfig& city,
                                   const PipelineConfig& cfg, bool strict) {
  cfg.validate();
  PreprocessResult result;
  std::map<std::string, std::vector<RawVisit>> by_user;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    const RawVisit& v = visits[i];
    if (!in_bounds(v.lat, v.lon, city.bounds)) {
      const std::string msg = "visit " + std::to_string(i + 1) + " of user " + v.user_id +
                              " lies outside the bounding box of " + city.name;
      if (strict) fail(ErrorKind::kData, msg);
      result.skipped.push_back({i + 1, msg});
      continue;
    }
    by_user[v.user_id].push_back(v);
  }
  for (const auto& [user, vs] : by_user) {
    auto windows = window_trajectories(vs, city, cfg);
    for (auto& w : windows) result.trajectories.push_back(std::move(w));
  }
  return result;
}

OrderedJson trajectory_to_json(const Trajectory& t) {
  OrderedJson j;
  j["user_id"] = t.user_id;
  j["window_start_day"] = t.window_start_day;
  j["city"] = t.city;
  OrderedJson pts = OrderedJson::array();
  for (const TrajPoint& p : t.points) {
    OrderedJson q;
    q["weekday"] = p.weekday;
    q["slot"] = p.slot;
    q["row"] = p.cell.row;
    q["col"] = p.cell.col;
    if (p.tokens) q["tokens"] = p.tokens->indices;
    pts.push_back(std::move(q));
  }
  j["points"] = std::move(pts);
  return j;
}

Trajectory trajectory_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::kData, "trajectory record is not an object");
  Trajectory t;
  if (!j.contains("user_id") || !j["user_id"].is_string())
    fail(ErrorKind::kData, "trajectory lacks string user_id");
  t.user_id = j["user_id"].get<std::string>();
  if (!j.contains("window_start_day") || !j["window_start_day"].is_number_integer())
    fail(ErrorKind::kData, "trajectory lacks integer window_start_day");
  t.window_start_day = j["window_start_day"].get<std::int64_t>();
  if (j.contains("city") && j["city"].is_string()) t.city = j["city"].get<std::string>();
  if (!j.contains("points") || !j["points"].is_array())
    fail(ErrorKind::kData, "trajectory lacks points array");
  const int start_weekday = weekday_of_day(t.window_start_day);
  const std::string at = "trajectory of " + t.user_id + ": ";
  for (const Json& q : j["points"]) {
    TrajPoint p;
    p.weekday = json_int(q, "weekday", at);
    p.slot = json_int(q, "slot", at);
    p.cell = {json_int(q, "row", at), json_int(q, "col", at)};
    if (p.weekday < 0 || p.weekday > 6) fail(ErrorKind::kData, at + "weekday out of range");
    if (p.slot < 0 || p.slot >= kSlotsPerDay) fail(ErrorKind::kData, at + "slot out of range");
    p.day = ((p.weekday - start_weekday) % 7 + 7) % 7;
    if (q.contains("tokens") && !q["tokens"].is_null()) {
      if (!q["tokens"].is_array()) fail(ErrorKind::kData, at + "tokens must be an array");
      LocationTokenSeq seq;
      for (const Json& x : q["tokens"]) {
        if (!x.is_number_integer() || x.get<int>() < 0)
          fail(ErrorKind::kData, at + "token indices must be non-negative integers");
        seq.indices.push_back(x.get<int>());
      }
      p.tokens = std::move(seq);
    }
    if (!t.points.empty()) {
      const TrajPoint& prev = t.points.back();
      if (std::pair(p.day, p.slot) < std::pair(prev.day, prev.slot))
        fail(ErrorKind::kData, at + "points are not in time order");
    }
    t.points.push_back(std::move(p));
  }
  return t;
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  std::vector<Trajectory> out;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    try {
      out.push_back(trajectory_from_json(j));
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

std::string trajectories_to_jsonl(const std::vector<Trajectory>& ts) {
  std::string out;
  for (const auto& t : ts) {
    out += trajectory_to_json(t).dump();
    out += '\n';
  }
  return out;
}

Trajectory day_slice(const Trajectory& t, int first_day, int day_count) {
  Trajectory s;
  s.user_id = t.user_id;
  s.window_start_day = t.window_start_day + first_day;
  s.city = t.city;
  for (const TrajPoint& p : t.points) {
    if (p.day < first_day || p.day >= first_day + day_count) continue;
    TrajPoint q = p;
    q.day -= first_day;
    s.points.push_back(std::move(q));
  }
  return s;
}

}  // namespace movetok
