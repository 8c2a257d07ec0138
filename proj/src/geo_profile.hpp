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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace movetok {

// Nearby point-of-interest categories, in the order used for rendering.
enum class PoiCategory : int {
  kFinance,
  kPublic,
  kTransport,
  kEntertainment,
  kHealth,
  kService,
  kEducation,
  kGovernment,
  kReligion,
  kAccommodation,
  kFood,
  kCafe,
  kFastFood,
  kIceCream,
  kPub,
  kRestaurant,
  kShopBeauty,
  kShopClothes,
  kBoutique,
  kShopTransport,
  kRetail,
  kCommodity,
  kMarketplace,
  kHomeImprovement,
  kSport,
  kPublicTransport,
  kKindergarten,
  kOffice,
  kRecycling,
  kTravelAgency,
  kTourism,
  kShopLivelihood,
  kResidential,
  kDormitory,
};

inline constexpr std::size_t kPoiCategoryCount = 34;

std::string_view poi_category_name(PoiCategory c);
std::optional<PoiCategory> parse_poi_category(std::string_view name);

enum class OsmType { kNode, kWay, kRelation };

std::string_view osm_type_name(OsmType t);
std::optional<OsmType> parse_osm_type(std::string_view name);

struct BoundingBox {
  double min_lat = 0.0;
  double max_lat = 0.0;
  double min_lon = 0.0;
  double max_lon = 0.0;

  bool operator==(const BoundingBox&) const = default;
};

struct LocationProfile {
  std::string location_id;
  std::string address;
  double center_lat = 0.0;
  double center_lon = 0.0;
  std::optional<BoundingBox> bbox;
  std::optional<OsmType> osm_type;
  std::optional<std::int64_t> osm_id;
  std::optional<std::int64_t> place_id;
  std::map<PoiCategory, std::int64_t> poi_counts;

  bool operator==(const LocationProfile&) const = default;
};

// Throws Error(kData) describing the first violated invariant.
void validate_profile(const LocationProfile& p);

LocationProfile profile_from_json(const Json& record);
OrderedJson profile_to_json(const LocationProfile& p);

struct LoadDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct ProfileLoadResult {
  std::vector<LocationProfile> profiles;
  std::vector<LoadDiagnostic> skipped;
};

/// Reads a line-delimited JSON locations file. In strict mode the first bad
/// record aborts the load; otherwise bad records are skipped and listed.
ProfileLoadResult load_profiles(const std::filesystem::path& path, bool strict);

/// Canonical English description of a profile. Sections without data are
/// omitted, except the POI sentence which always appears.
std::string render_profile_text(const LocationProfile& p);

enum class VectorSource { kImported, kFallback };

struct SemanticVector {
  std::vector<double> values;
  VectorSource source = VectorSource::kImported;
};

inline constexpr std::size_t kMinFallbackDim = 8;
inline constexpr std::size_t kDefaultSemanticDim = 2048;

// Hashed character trigrams of the rendered text fill the first d - 34
// entries, log-scaled POI counts fill the last 34; the result has unit norm.
SemanticVector encode_profile_fallback(const LocationProfile& p, std::size_t dim,
                                       std::uint64_t seed);

/// Loads {location_id, values} records. All vectors must share one dimension;
/// when expected_dim is set it must also equal that.
std::map<std::string, SemanticVector> import_embeddings(
    const std::filesystem::path& path,
    std::optional<std::size_t> expected_dim = std::nullopt);

}  // namespace movetok
