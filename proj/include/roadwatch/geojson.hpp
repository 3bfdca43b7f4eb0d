#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadwatch/dedupe.hpp"
#include "roadwatch/segment.hpp"

namespace roadwatch {

enum class Exposure {
  Public,   // no contractor contact, no account ids
  Private,  // every persisted field, suitable for re-import
};

/// FeatureCollection with potholes as Points and segments as LineStrings.
/// Coordinates are lon-first as GeoJSON requires.
nlohmann::json export_geojson(std::span<const Pothole> potholes, std::span<const RoadSegment> segments,
                              Exposure exposure = Exposure::Public);

nlohmann::json pothole_feature(const Pothole& p, Exposure exposure = Exposure::Public);
nlohmann::json segment_feature(const RoadSegment& s, Exposure exposure = Exposure::Public);

struct ImportedFeatures {
  std::vector<Pothole> potholes;
  std::vector<RoadSegment> segments;
};

/// Inverse of export_geojson(..., Exposure::Private).
/// Throws Error{InvalidArgument} on a malformed document.
ImportedFeatures import_geojson(const nlohmann::json& doc);

}  // namespace roadwatch
