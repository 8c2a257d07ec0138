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

#include "geo_profile.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace movetok {
namespace {

constexpr std::array<std::string_view, kPoiCategoryCount> kPoiNames = {
    "finance",       "public",           "transport",     "entertainment",
    "health",        "service",          "education",     "government",
    "religion",      "accommodation",    "food",          "cafe",
    "fast_food",     "ice_cream",        "pub",           "restaurant",
    "shop_beauty",   "shop_clothes",     "boutique",      "shop_transport",
    "retail",        "commodity",        "marketplace",   "home-improvement",
    "sport",         "public_transport", "kindergarten",  "office",
    "recycling",     "travel_agency",    "tourism",       "shop_livelihood",
    "residential",   "dormitory",
};

// Source tables carry a "gid" column next to the categories; it is a row id.
constexpr std::string_view kRecordIdColumn = "gid";

std::string display_name(PoiCategory c) {
  std::string s(poi_category_name(c));
  for (char& ch : s) {
    if (ch == '_' || ch == '-') ch = ' ';
  }
  return s;
}

std::string where(const Json& record) {
  if (record.is_object() && record.contains("location_id") &&
      record["location_id"].is_string()) {
    return " (location " + record["location_id"].get<std::string>() + ")";
  }
  return "";
}

double require_number(const Json& record, const char* key) {
  if (!record.contains(key) || !record[key].is_number()) {
    fail(ErrorKind::kData, std::string("missing or non-numeric field '") + key +
                               "'" + where(record));
  }
  return record[key].get<double>();
}

std::optional<std::int64_t> optional_int(const Json& record, const char* key) {
  if (!record.contains(key) || record[key].is_null()) return std::nullopt;
  if (!record[key].is_number_integer()) {
    fail(ErrorKind::kData, std::string("field '") + key + "' must be an integer" +
                               where(record));
  }
  return record[key].get<std::int64_t>();
}

}  // namespace

std::string_view poi_category_name(PoiCategory c) {
  return kPoiNames.at(static_cast<std::size_t>(c));
}

std::optional<PoiCategory> parse_poi_category(std::string_view name) {
  for (std::size_t i = 0; i < kPoiNames.size(); ++i) {
    if (kPoiNames[i] == name) return static_cast<PoiCategory>(i);
  }
  return std::nullopt;
}

std::string_view osm_type_name(OsmType t) {
  switch (t) {
    case OsmType::kNode:
      return "node";
    case OsmType::kWay:
      return "way";
    case OsmType::kRelation:
      return "relation";
  }
  return "node";
}

std::optional<OsmType> parse_osm_type(std::string_view name) {
  if (name == "node") return OsmType::kNode;
  if (name == "way") return OsmType::kWay;
  if (name == "relation") return OsmType::kRelation;
  return std::nullopt;
}

void validate_profile(const LocationProfile& p) {
  const std::string id = " (location " + p.location_id + ")";
  if (p.location_id.empty()) fail(ErrorKind::kData, "empty location_id");
  if (!std::isfinite(p.center_lat) || p.center_lat < -90.0 || p.center_lat > 90.0)
    fail(ErrorKind::kData, "center_lat out of range" + id);
  if (!std::isfinite(p.center_lon) || p.center_lon < -180.0 || p.center_lon > 180.0)
    fail(ErrorKind::kData, "center_lon out of range" + id);
  if (p.bbox) {
    const BoundingBox& b = *p.bbox;
    if (!(b.min_lat <= p.center_lat && p.center_lat <= b.max_lat))
      fail(ErrorKind::kData, "center_lat outside bounding box" + id);
    if (!(b.min_lon <= p.center_lon && p.center_lon <= b.max_lon))
      fail(ErrorKind::kData, "center_lon outside bounding box" + id);
  }
  for (const auto& [cat, count] : p.poi_counts) {
    if (count < 0) {
      fail(ErrorKind::kData, "negative count for POI category " +
                                 std::string(poi_category_name(cat)) + id);
    }
  }
}

LocationProfile profile_from_json(const Json& record) {
  if (!record.is_object()) fail(ErrorKind::kData, "record is not an object");
  LocationProfile p;
  if (!record.contains("location_id") || !record["location_id"].is_string())
    fail(ErrorKind::kData, "missing string field 'location_id'");
  p.location_id = record["location_id"].get<std::string>();
  if (record.contains("address") && !record["address"].is_null()) {
    if (!record["address"].is_string())
      fail(ErrorKind::kData, "field 'address' must be a string" + where(record));
    p.address = record["address"].get<std::string>();
  }
  p.center_lat = require_number(record, "center_lat");
  p.center_lon = require_number(record, "center_lon");

  if (record.contains("bbox") && !record["bbox"].is_null()) {
    const Json& b = record["bbox"];
    BoundingBox box;
    if (b.is_array() && b.size() == 4 &&
        std::all_of(b.begin(), b.end(), [](const Json& x) { return x.is_number(); })) {
      box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
             b[3].get<double>()};
    } else if (b.is_object()) {
      box = {require_number(b, "min_lat"), require_number(b, "max_lat"),
             require_number(b, "min_lon"), require_number(b, "max_lon")};
    } else {
      fail(ErrorKind::kData,
           "bbox must be [min_lat, max_lat, min_lon, max_lon]" + where(record));
    }
    p.bbox = box;
  }

  if (record.contains("osm_type") && !record["osm_type"].is_null()) {
    const Json& t = record["osm_type"];
    auto parsed = t.is_string() ? parse_osm_type(t.get<std::string>()) : std::nullopt;
    if (!parsed) fail(ErrorKind::kData, "osm_type must be node, way or relation" + where(record));
    p.osm_type = parsed;
  }
  p.osm_id = optional_int(record, "osm_id");
  p.place_id = optional_int(record, "place_id");

  if (record.contains("poi_counts") && !record["poi_counts"].is_null()) {
    const Json& pois = record["poi_counts"];
    if (!pois.is_object()) fail(ErrorKind::kData, "poi_counts must be an object" + where(record));
    for (const auto& [name, count] : pois.items()) {
      if (name == kRecordIdColumn) continue;
      auto cat = parse_poi_category(name);
      if (!cat) fail(ErrorKind::kData, "unknown POI category '" + name + "'" + where(record));
      if (!count.is_number_integer())
        fail(ErrorKind::kData, "POI count for '" + name + "' must be an integer" + where(record));
      const auto n = count.get<std::int64_t>();
      if (n > 0) p.poi_counts[*cat] = n;
      if (n < 0) fail(ErrorKind::kData, "negative POI count for '" + name + "'" + where(record));
    }
  }
  validate_profile(p);
  return p;
}

OrderedJson profile_to_json(const LocationProfile& p) {
  OrderedJson j;
  j["location_id"] = p.location_id;
  j["address"] = p.address;
  j["center_lat"] = p.center_lat;
  j["center_lon"] = p.center_lon;
  if (p.bbox) {
    j["bbox"] = {p.bbox->min_lat, p.bbox->max_lat, p.bbox->min_lon, p.bbox->max_lon};
  }
  if (p.osm_type) j["osm_type"] = std::string(osm_type_name(*p.osm_type));
  if (p.osm_id) j["osm_id"] = *p.osm_id;
  if (p.place_id) j["place_id"] = *p.place_id;
  OrderedJson pois = OrderedJson::object();
  for (const auto& [cat, count] : p.poi_counts) {
    pois[std::string(poi_category_name(cat))] = count;
  }
  j["poi_counts"] = pois;
  return j;
}

ProfileLoadResult load_profiles(const std::filesystem::path& path, bool strict) {
  ProfileLoadResult result;
  std::set<std::string> seen;
  for_each_jsonl(path, [&](std::size_t line, const Json& record) {
    try {
      LocationProfile p = profile_from_json(record);
      if (!seen.insert(p.location_id).second)
        fail(ErrorKind::kData, "duplicate location_id '" + p.location_id + "'");
      result.profiles.push_back(std::move(p));
    } catch (const Error& e) {
      const std::string msg = path.string() + ":" + std::to_string(line) + ": " + e.what();
      if (strict) fail(e.kind(), msg);
      result.skipped.push_back({line, msg});
    }
  }, strict ? std::function<void(std::size_t, const std::string&)>{} : [&](std::size_t line, const std::string& msg) {
    result.skipped.push_back({line, msg});
  });
  return result;
}

std::string render_profile_text(const LocationProfile& p) {
  std::ostringstream out;
  bool first = true;
  auto sentence = [&](const std::string& s) {
    if (!first) out << ' ';
    out << s;
    first = false;
  };

  if (!p.address.empty()) sentence("The location is situated at " + p.address + ".");
  sentence("The center of the location is at latitude " + format_double(p.center_lat) +
           " and longitude " + format_double(p.center_lon) + ".");
  if (p.bbox) {
    sentence("The area is bounded by minimum latitude " + format_double(p.bbox->min_lat) +
             ", maximum latitude " + format_double(p.bbox->max_lat) +
             ", minimum longitude " + format_double(p.bbox->min_lon) +
             " and maximum longitude " + format_double(p.bbox->max_lon) + ".");
  }
  std::vector<std::string> osm;
  if (p.osm_type) osm.push_back("OSM type " + std::string(osm_type_name(*p.osm_type)));
  if (p.osm_id) osm.push_back("OSM ID " + std::to_string(*p.osm_id));
  if (p.place_id) osm.push_back("Place ID " + std::to_string(*p.place_id));
  if (!osm.empty()) {
    std::string s = "OpenStreetMap (OSM) details: ";
    for (std::size_t i = 0; i < osm.size(); ++i) s += (i ? ", " : "") + osm[i];
    sentence(s + ".");
  }
  std::string pois;
  for (const auto& [cat, count] : p.poi_counts) {
    if (count <= 0) continue;
    if (!pois.empty()) pois += ", ";
    pois += std::to_string(count) + " " + display_name(cat);
  }
  sentence(pois.empty() ? "The location includes no points of interest."
                        : "The location includes " + pois + ".");
  return out.str();
}

SemanticVector encode_profile_fallback(const LocationProfile& p, std::size_t dim,
                                       std::uint64_t seed) {
  if (dim < kMinFallbackDim) {
    fail(ErrorKind::kUsage, "fallback encoder dimension must be at least " +
                                std::to_string(kMinFallbackDim) + ", got " +
                                std::to_string(dim));
  }
  // Dimensions too small for dedicated POI channels fold them into the text
  // block.
  const std::size_t poi_dims =
      dim >= kPoiCategoryCount + kMinFallbackDim ? kPoiCategoryCount : 0;
  const std::size_t text_dims = dim - poi_dims;

  std::vector<double> text(text_dims, 0.0);
  const std::string padded = "  " + render_profile_text(p) + " ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, 3), seed);
    text[h % text_dims] += (h >> 63) ? -1.0 : 1.0;
  }
  std::vector<double> poi(poi_dims, 0.0);
  for (const auto& [cat, count] : p.poi_counts) {
    const double w = std::log1p(static_cast<double>(count));
    if (poi_dims > 0) {
      poi[static_cast<std::size_t>(cat)] = w;
    } else {
      const std::uint64_t h = fnv1a64(poi_category_name(cat), seed ^ 0x5a5a);
      text[h % text_dims] += w;
    }
  }

  auto normalize = [](std::vector<double>& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 > 0.0) {
      const double inv = 1.0 / std::sqrt(n2);
      for (double& x : v) x *= inv;
    }
  };
  normalize(text);
  normalize(poi);

  SemanticVector out;
  out.source = VectorSource::kFallback;
  out.values = std::move(text);
  out.values.insert(out.values.end(), poi.begin(), poi.end());
  normalize(out.values);
  return out;
}

std::map<std::string, SemanticVector> import_embeddings(
    const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  std::map<std::string, SemanticVector> out;
  std::optional<std::size_t> dim = expected_dim;
  for_each_jsonl(path, [&](std::size_t line, const Json& record) {
    const std::string at = path.string() + ":" + std::to_string(line) + ": ";
    if (!record.is_object() || !record.contains("location_id") ||
        !record["location_id"].is_string() || !record.contains("values") ||
        !record["values"].is_array()) {
      fail(ErrorKind::kData, at + "expected {location_id, values}");
    }
    const auto id = record["location_id"].get<std::string>();
    SemanticVector v;
    v.source = VectorSource::kImported;
    v.values.reserve(record["values"].size());
    for (const Json& x : record["values"]) {
      if (!x.is_number()) fail(ErrorKind::kData, at + "non-numeric entry for " + id);
      v.values.push_back(x.get<double>());
    }
    if (!all_finite(v.values)) fail(ErrorKind::kData, at + "non-finite entry for " + id);
    if (!dim) dim = v.values.size();
    if (v.values.size() != *dim) {
      fail(ErrorKind::kData, at + "dimension mismatch for " + id + ": expected " +
                                 std::to_string(*dim) + ", got " +
                                 std::to_string(v.values.size()));
    }
    if (!out.emplace(id, std::move(v)).second)
      fail(ErrorKind::kData, at + "duplicate location_id '" + id + "'");
  });
  return out;
}

}  // namespace movetok
