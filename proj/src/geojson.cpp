#include "roadwatch/geojson.hpp"

#include "roadwatch/error.hpp"

namespace roadwatch {

using nlohmann::json;

json pothole_feature(const Pothole& p, Exposure exposure) {
  json props{{"id", p.id},
             {"severity", to_string(p.severity)},
             {"status", to_string(p.status)},
             {"first_seen", format_iso(p.first_seen)},
             {"last_seen", format_iso(p.last_seen)},
             {"detection_count", p.detection_count},
             {"segment_id", p.segment_id ? json(*p.segment_id) : json(nullptr)},
             {"thumbnail", p.thumbnail ? json(*p.thumbnail) : json(nullptr)}};
  if (exposure == Exposure::Private) props["version"] = p.version;
  return json{{"type", "Feature"},
              {"id", "pothole/" + std::to_string(p.id)},
              {"geometry", {{"type", "Point"}, {"coordinates", {p.position.lon, p.position.lat}}}},
              {"properties", std::move(props)}};
}

json segment_feature(const RoadSegment& s, Exposure exposure) {
  json coords = json::array();
  for (const auto& v : s.geometry.vertices()) coords.push_back({v.lon, v.lat});
  json props{{"id", s.id},
             {"health", to_string(s.health)},
             {"contractor_name", s.contract.contractor_name},
             {"construction_date", format_date(s.contract.construction_date)},
             {"budget", s.contract.budget},
             {"warranty_end", format_date(s.contract.warranty_end)},
             {"length_m", s.length_m},
             {"category", s.category ? json(*s.category) : json(nullptr)}};
  if (exposure == Exposure::Private) {
    props["contractor_contact"] = s.contract.contractor_contact;
    props["created_by"] = s.created_by;
    props["mode"] = to_string(s.mode);
    props["start"] = {s.start.lat, s.start.lon};
    props["end"] = {s.end.lat, s.end.lon};
    props["version"] = s.version;
  }
  return json{{"type", "Feature"},
              {"id", "segment/" + std::to_string(s.id)},
              {"geometry", {{"type", "LineString"}, {"coordinates", std::move(coords)}}},
              {"properties", std::move(props)}};
}

json export_geojson(std::span<const Pothole> potholes, std::span<const RoadSegment> segments,
                    Exposure exposure) {
  json features = json::array();
  for (const auto& s : segments) features.push_back(segment_feature(s, exposure));
  for (const auto& p : potholes) features.push_back(pothole_feature(p, exposure));
  return json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

namespace {

UtcInstant instant(const json& j) {
  auto t = parse_iso(j.get<std::string>());
  if (!t) throw std::invalid_argument("bad instant " + j.dump());
  return *t;
}

Date date(const json& j) {
  auto d = parse_date(j.get<std::string>());
  if (!d) throw std::invalid_argument("bad date " + j.dump());
  return *d;
}

template <typename T, typename Parse>
T enum_value(const json& j, Parse parse) {
  auto v = parse(j.get<std::string>());
  if (!v) throw std::invalid_argument("unknown value " + j.dump());
  return *v;
}

}  // namespace

ImportedFeatures import_geojson(const json& doc) {
  ImportedFeatures out;
  try {
    if (doc.at("type") != "FeatureCollection") throw std::invalid_argument("not a FeatureCollection");
    for (const auto& f : doc.at("features")) {
      const auto& geom = f.at("geometry");
      const auto& props = f.at("properties");
      const std::string type = geom.at("type");
      if (type == "Point") {
        Pothole p;
        p.id = props.at("id");
        p.position = {geom.at("coordinates").at(1).get<double>(), geom.at("coordinates").at(0).get<double>()};
        p.severity = enum_value<Severity>(props.at("severity"), severity_from_string);
        p.status = enum_value<PotholeStatus>(props.at("status"), status_from_string);
        p.first_seen = instant(props.at("first_seen"));
        p.last_seen = instant(props.at("last_seen"));
        p.detection_count = props.at("detection_count");
        if (!props.at("segment_id").is_null()) p.segment_id = props.at("segment_id").get<std::int64_t>();
        if (!props.at("thumbnail").is_null()) p.thumbnail = props.at("thumbnail").get<std::string>();
        p.version = props.value("version", std::int64_t{0});
        out.potholes.push_back(std::move(p));
      } else if (type == "LineString") {
        RoadSegment s;
        s.id = props.at("id");
        std::vector<LatLon> vertices;
        for (const auto& c : geom.at("coordinates")) vertices.push_back({c.at(1).get<double>(), c.at(0).get<double>()});
        s.geometry = Polyline(std::move(vertices));
        s.health = enum_value<HealthState>(props.at("health"), health_from_string);
        s.contract.contractor_name = props.at("contractor_name");
        s.contract.contractor_contact = props.value("contractor_contact", "");
        s.contract.construction_date = date(props.at("construction_date"));
        s.contract.budget = props.at("budget");
        s.contract.warranty_end = date(props.at("warranty_end"));
        s.length_m = props.at("length_m");
        if (props.contains("category") && !props.at("category").is_null()) s.category = props.at("category");
        s.created_by = props.value("created_by", "");
        s.mode = enum_value<SegmentMode>(props.value("mode", json("straight")), mode_from_string);
        if (props.contains("start")) {
          s.start = {props.at("start").at(0), props.at("start").at(1)};
          s.end = {props.at("end").at(0), props.at("end").at(1)};
        } else {
          s.start = s.geometry.vertices().front();
          s.end = s.geometry.vertices().back();
        }
        s.version = props.value("version", std::int64_t{0});
        out.segments.push_back(std::move(s));
      } else {
        throw std::invalid_argument("unsupported geometry type " + type);
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed GeoJSON: ") + e.what());
  }
  return out;
}

}  // namespace roadwatch
