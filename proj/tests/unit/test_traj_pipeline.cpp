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

#include "doctest.h"
#include "helpers.hpp"
#include "traj_pipeline.hpp"

using namespace movetok;

namespace {

CityConfig test_city() {
  CityConfig c;
  c.name = "testville";
  c.origin_lat = 35.0;
  c.origin_lon = 139.0;
  c.bounds = {35.0, 35.5, 139.0, 139.5};
  c.tz_offset_seconds = 0;
  return c;
}

RawVisit visit_at(const std::string& user, std::int64_t day, int minute, double north, double east,
                  const CityConfig& city) {
  const auto [lat, lon] = offset_to_latlon(north, east, city);
  return {user, day * 86400 + minute * 60, lat, lon};
}

}  // namespace

TEST_CASE("grid assignment uses 500 m cells from the origin") {
  const auto city = test_city();
  const auto [lat, lon] = offset_to_latlon(760.0, 1260.0, city);
  CHECK(assign_grid(lat, lon, city, 500.0) == GridCell{1, 2});
  const auto [lat2, lon2] = offset_to_latlon(499.0, 10.0, city);
  CHECK(assign_grid(lat2, lon2, city, 500.0) == GridCell{0, 0});
  CHECK(assign_grid(lat, lon, city, 250.0) == GridCell{3, 5});
  try {
    assign_grid(34.9, 139.1, city, 500.0);
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kData);
  }
}

TEST_CASE("time binning into 30-minute slots") {
  auto b = bin_time(0, 0);
  CHECK(b.day == 0);
  CHECK(b.slot == 0);
  CHECK(b.weekday == 3);  // 1970-01-01 was a Thursday
  CHECK(bin_time(30 * 60 - 1, 0).slot == 0);
  CHECK(bin_time(30 * 60, 0).slot == 1);
  b = bin_time(15 * 3600, 9 * 3600);
  CHECK(b.day == 1);
  CHECK(b.slot == 0);
  CHECK(b.weekday == 4);
  b = bin_time(-1, 0);
  CHECK(b.day == -1);
  CHECK(b.slot == 47);
  CHECK(b.weekday == 2);
  CHECK(format_slot_time(4, 9) == "Friday 04:30");
  CHECK(format_slot_time(0, 47) == "Monday 23:30");
}

TEST_CASE("default pipeline settings") {
  const PipelineConfig c;
  CHECK(c.cell_size_m == 500.0);
  CHECK(c.slot_minutes == 30);
  CHECK(c.window_days == 3);
  CHECK(c.stride_days == 1);
  CHECK(c.min_points == 5);
  CHECK(c.max_points == 145);
  PipelineConfig bad;
  bad.slot_minutes = 15;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = PipelineConfig{};
  bad.max_points = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("sliding three-day windows") {
  const auto city = test_city();
  std::vector<RawVisit> vs;
  for (int d = 10; d <= 12; ++d) {
    vs.push_back(visit_at("u", d, 60, 100, 100, city));
    vs.push_back(visit_at("u", d, 600, 900, 100, city));
  }
  PipelineConfig cfg;
  cfg.min_points = 1;
  const auto all = window_trajectories(vs, city, cfg);
  REQUIRE(all.size() == 5);
  CHECK(all.front().window_start_day == 8);
  CHECK(all.back().window_start_day == 12);
  const Trajectory& full = all[2];
  CHECK(full.window_start_day == 10);
  REQUIRE(full.points.size() == 6);
  CHECK(full.points[0].day == 0);
  CHECK(full.points[5].day == 2);
  CHECK(full.points[1].slot == 20);
  CHECK(full.points[1].cell == GridCell{1, 0});

  cfg.min_points = 5;
  const auto kept = window_trajectories(vs, city, cfg);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].window_start_day == 10);

  cfg.min_points = 1;
  cfg.max_points = 4;
  const auto capped = window_trajectories(vs, city, cfg);
  CHECK(capped[2].points.size() == 4);
  CHECK(capped[2].points.front().day == 1);
}

TEST_CASE("consecutive duplicates in one slot collapse") {
  const auto city = test_city();
  std::vector<RawVisit> vs{visit_at("u", 5, 61, 10, 10, city), visit_at("u", 5, 62, 20, 20, city),
                           visit_at("u", 5, 63, 600, 20, city), visit_at("u", 5, 64, 20, 20, city)};
  PipelineConfig cfg;
  cfg.min_points = 1;
  cfg.window_days = 1;
  auto w = window_trajectories(vs, city, cfg);
  REQUIRE(w.size() == 1);
  CHECK(w[0].points.size() == 3);
  cfg.dedup_consecutive = false;
  CHECK(window_trajectories(vs, city, cfg)[0].points.size() == 4);
}

TEST_CASE("raw visit loading, lenient and strict") {
  const auto dir = testing::scratch_dir("visits");
  write_file(dir / "v.jsonl",
             "{\"user_id\":\"a\",\"timestamp\":100,\"lat\":35.1,\"lon\":139.1}\n"
             "{\"user_id\":7,\"timestamp\":200,\"lat\":35.1,\"lon\":139.1}\n"
             "{\"user_id\":\"a\",\"timestamp\":300,\"lat\":95,\"lon\":139.1}\n"
             "{\"user_id\":\"a\",\"timestamp\":\n");
  const auto r = load_raw_visits(dir / "v.jsonl", false);
  CHECK(r.visits.size() == 2);
  CHECK(r.visits[1].user_id == "7");
  REQUIRE(r.skipped.size() == 2);
  CHECK(r.skipped[0].line == 3);
  CHECK(r.skipped[1].line == 4);
  CHECK(r.skipped[1].message.find("malformed record") != std::string::npos);
  try {
    load_raw_visits(dir / "v.jsonl", true);
    FAIL("strict load should fail");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("v.jsonl:3") != std::string::npos);
  }
}

TEST_CASE("out-of-bounds visits are skipped or fatal") {
  const auto city = test_city();
  std::vector<RawVisit> vs;
  for (int i = 0; i < 6; ++i) vs.push_back(visit_at("u", 3, 60 * i, 100, 100, city));
  vs.push_back({"u", 3 * 86400, 10.0, 10.0});
  const auto r = preprocess_visits(vs, city, PipelineConfig{}, false);
  CHECK(r.skipped.size() == 1);
  CHECK(r.trajectories.size() == 3);
  CHECK_THROWS_AS(preprocess_visits(vs, city, PipelineConfig{}, true), Error);
}

TEST_CASE("trajectory json round-trip and ordering") {
  auto t = testing::make_traj({{3, 1, 2}, {40, 0, 0}, {2, 5, 5, 1}, {9, 5, 5, 2}});
  t.points[1].tokens = LocationTokenSeq{{1, 2, 3, 4}};
  const auto back = trajectory_from_json(Json::parse(trajectory_to_json(t).dump()));
  CHECK(back == t);
  Json j = Json::parse(trajectory_to_json(t).dump());
  std::swap(j["points"][0], j["points"][1]);
  j["points"][0]["slot"] = 45;
  CHECK_THROWS_AS(trajectory_from_json(j), Error);
}

TEST_CASE("day slices are re-based") {
  const auto t = testing::make_traj({{3, 1, 2}, {2, 5, 5, 1}, {9, 5, 5, 2}, {10, 5, 4, 2}});
  const auto s = day_slice(t, 1, 2);
  CHECK(s.window_start_day == t.window_start_day + 1);
  REQUIRE(s.points.size() == 3);
  CHECK(s.points[0].day == 0);
  CHECK(s.points[2].day == 1);
  CHECK(day_slice(t, 0, 1).points.size() == 1);
}

TEST_CASE("city config parsing") {
  const Json j = Json::parse(R"({"name":"x","origin_lat":1,"origin_lon":2,"bbox":[1,2,2,3]})");
  const auto c = CityConfig::from_json(j);
  CHECK(c.bounds.max_lon == 3.0);
  CHECK(c.scale_lat() == 1.0);
  CHECK_THROWS_AS(CityConfig::from_json(Json::parse(R"({"origin_lat":1,"origin_lon":2})")), Error);
}
