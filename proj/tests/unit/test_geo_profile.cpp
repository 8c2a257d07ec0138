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

#include <cmath>

#include "doctest.h"
#include "geo_profile.hpp"
#include "helpers.hpp"

using namespace movetok;

namespace {

LocationProfile sample_profile() {
  LocationProfile p;
  p.location_id = "L1";
  p.address = "2-1 Marunouchi, Chiyoda";
  p.center_lat = 35.68;
  p.center_lon = 139.76;
  p.bbox = BoundingBox{35.67, 35.69, 139.75, 139.77};
  p.osm_type = OsmType::kWay;
  p.osm_id = 42;
  p.poi_counts = {{PoiCategory::kCafe, 3}, {PoiCategory::kFastFood, 1}, {PoiCategory::kOffice, 0}};
  return p;
}

}  // namespace

TEST_CASE("profile text lists every populated field") {
  const std::string text = render_profile_text(sample_profile());
  CHECK(text ==
        "The location is situated at 2-1 Marunouchi, Chiyoda. The center of the location is at "
        "latitude 35.68 and longitude 139.76. The area is bounded by minimum latitude 35.67, maximum "
        "latitude 35.69, minimum longitude 139.75 and maximum longitude 139.77. OpenStreetMap (OSM) "
        "details: OSM type way, OSM ID 42. The location includes 3 cafe, 1 fast food.");
}

TEST_CASE("profile text without points of interest") {
  LocationProfile p;
  p.location_id = "x";
  CHECK(render_profile_text(p) ==
        "The center of the location is at latitude 0 and longitude 0. The location includes no points "
        "of interest.");
}

TEST_CASE("profile json round-trip") {
  auto p = sample_profile();
  const auto back = profile_from_json(Json::parse(profile_to_json(p).dump()));
  // Zero counts are dropped on load.
  p.poi_counts.erase(PoiCategory::kOffice);
  CHECK(back == p);
}

TEST_CASE("profile validation") {
  auto p = sample_profile();
  p.center_lat = 95.0;
  CHECK_THROWS_AS(validate_profile(p), Error);
  p = sample_profile();
  p.center_lon = 139.80;
  CHECK_THROWS_AS(validate_profile(p), Error);
  p = sample_profile();
  p.poi_counts[PoiCategory::kPub] = -1;
  CHECK_THROWS_AS(validate_profile(p), Error);
}

TEST_CASE("loading profiles: lenient skips, strict aborts with the line") {
  const auto dir = testing::scratch_dir("profiles");
  write_file(dir / "p.jsonl",
             "{\"location_id\":\"a\",\"center_lat\":1,\"center_lon\":2}\n"
             "{\"location_id\":\"b\",\"center_lat\":1}\n"
             "not json\n"
             "{\"location_id\":\"c\",\"center_lat\":1,\"center_lon\":2,\"poi_counts\":{\"gid\":9,\"cafe\":2}}\n");
  const auto lenient = load_profiles(dir / "p.jsonl", false);
  REQUIRE(lenient.profiles.size() == 2);
  CHECK(lenient.profiles[1].poi_counts.at(PoiCategory::kCafe) == 2);
  CHECK(lenient.profiles[1].poi_counts.size() == 1);
  REQUIRE(lenient.skipped.size() == 2);
  CHECK(lenient.skipped[0].line == 2);
  CHECK(lenient.skipped[1].line == 3);
  try {
    load_profiles(dir / "p.jsonl", true);
    FAIL("strict load should fail");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kData);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("category names round-trip") {
  for (std::size_t i = 0; i < kPoiCategoryCount; ++i) {
    const auto c = static_cast<PoiCategory>(i);
    CHECK(parse_poi_category(poi_category_name(c)) == c);
  }
  CHECK_FALSE(parse_poi_category("bakery").has_value());
}

TEST_CASE("fallback encoder is deterministic, unit norm and text sensitive") {
  const auto p = sample_profile();
  const auto a = encode_profile_fallback(p, 256, 7);
  const auto b = encode_profile_fallback(p, 256, 7);
  CHECK(a.values == b.values);
  CHECK(a.source == VectorSource::kFallback);
  REQUIRE(a.values.size() == 256);
  double norm = 0.0;
  for (double v : a.values) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));

  auto q = p;
  q.address = "3-5 Shinjuku";
  CHECK(encode_profile_fallback(q, 256, 7).values != a.values);
  CHECK(encode_profile_fallback(p, 256, 8).values != a.values);
  CHECK_THROWS_AS(encode_profile_fallback(p, 4, 7), Error);
}

TEST_CASE("embedding import checks dimensions") {
  const auto dir = testing::scratch_dir("embeddings");
  write_file(dir / "e.jsonl",
             "{\"location_id\":\"a\",\"values\":[1,0,0]}\n{\"location_id\":\"b\",\"values\":[0,1,0]}\n");
  const auto m = import_embeddings(dir / "e.jsonl");
  CHECK(m.size() == 2);
  CHECK(m.at("b").values == std::vector<double>{0, 1, 0});
  CHECK_THROWS_AS(import_embeddings(dir / "e.jsonl", 4), Error);
  write_file(dir / "ragged.jsonl",
             "{\"location_id\":\"a\",\"values\":[1,0,0]}\n{\"location_id\":\"b\",\"values\":[0,1]}\n");
  CHECK_THROWS_AS(import_embeddings(dir / "ragged.jsonl"), Error);
}
