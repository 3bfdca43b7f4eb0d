#include "roadwatch/segment.hpp"

#include <httplib.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "roadwatch/error.hpp"

namespace roadwatch {

std::string_view to_string(HealthState h) noexcept {
  switch (h) {
    case HealthState::Green: return "green";
    case HealthState::Yellow: return "yellow";
    case HealthState::Orange: return "orange";
    case HealthState::Red: return "red";
  }
  return "green";
}

std::optional<HealthState> health_from_string(std::string_view s) noexcept {
  if (s == "green") return HealthState::Green;
  if (s == "yellow") return HealthState::Yellow;
  if (s == "orange") return HealthState::Orange;
  if (s == "red") return HealthState::Red;
  return std::nullopt;
}

std::string_view to_string(SegmentMode m) noexcept {
  return m == SegmentMode::Routed ? "routed" : "straight";
}

std::optional<SegmentMode> mode_from_string(std::string_view s) noexcept {
  if (s == "routed") return SegmentMode::Routed;
  if (s == "straight") return SegmentMode::Straight;
  return std::nullopt;
}

Polyline::Polyline(std::vector<LatLon> vertices) {
  for (const auto& v : vertices) {
    if (!valid_coordinate(v)) throw Error(ErrorCode::InvalidGeometry, "vertex out of range");
    if (vertices_.empty() || !(vertices_.back() == v)) vertices_.push_back(v);
  }
  if (vertices_.size() < 2) {
    throw Error(ErrorCode::InvalidGeometry, "polyline needs at least two distinct vertices");
  }
}

double polyline_length_m(const Polyline& p) { return polyline_length_m(p.span()); }

void validate(const ContractMetadata& c) {
  if (c.contractor_name.empty()) throw Error(ErrorCode::InvalidContract, "contractor_name is required");
  if (!c.construction_date.ok() || !c.warranty_end.ok()) {
    throw Error(ErrorCode::InvalidContract, "contract dates must be valid calendar dates");
  }
  if (!(c.budget >= 0.0) || !std::isfinite(c.budget)) {
    throw Error(ErrorCode::InvalidContract, "budget must be a non-negative amount");
  }
  if (c.warranty_end < c.construction_date) {
    throw Error(ErrorCode::InvalidContract, "warranty_end precedes construction_date");
  }
}

std::string osrm_route_target(const LatLon& start, const LatLon& end) {
  using detail::shortest;
  return "/route/v1/driving/" + shortest(start.lon) + "," + shortest(start.lat) + ";" +
         shortest(end.lon) + "," + shortest(end.lat) + "?overview=full&geometries=geojson";
}

Polyline parse_osrm_response(std::string_view body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderUnreachable, std::string("unparseable routing response: ") + e.what());
  }
  const std::string code = doc.value("code", "");
  if (code != "Ok") {
    throw Error(ErrorCode::NoRoute, "routing provider answered '" + code + "'");
  }
  try {
    const auto& coords = doc.at("routes").at(0).at("geometry").at("coordinates");
    std::vector<LatLon> vertices;
    vertices.reserve(coords.size());
    for (const auto& c : coords) vertices.push_back({c.at(1).get<double>(), c.at(0).get<double>()});
    return Polyline(std::move(vertices));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::NoRoute, std::string("routing response lacks a route geometry: ") + e.what());
  }
}

OsrmRouter::OsrmRouter(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

Polyline OsrmRouter::route(const LatLon& start, const LatLon& end) {
  const auto url = detail::split_url(base_url_);
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  client.set_url_encode(false);  // ',' and ';' must stay literal
  auto res = client.Get(url.path + osrm_route_target(start, end));
  if (!res) {
    throw Error(ErrorCode::ProviderUnreachable,
                "routing provider " + base_url_ + " unreachable: " + httplib::to_string(res.error()));
  }
  // OSRM reports NoRoute with a 400 and a JSON body, so the body decides.
  if (res->status >= 500) {
    throw Error(ErrorCode::ProviderUnreachable, "routing provider returned HTTP " + std::to_string(res->status));
  }
  return parse_osrm_response(res->body);
}

Polyline build_geometry(const LatLon& start, const LatLon& end, SegmentMode mode, bool fallback,
                        RoutingProvider* provider) {
  if (!valid_coordinate(start) || !valid_coordinate(end) || start == end) {
    throw Error(ErrorCode::InvalidGeometry, "segment endpoints must be valid and distinct");
  }
  if (mode == SegmentMode::Straight) return Polyline({start, end});
  if (provider == nullptr) {
    if (fallback) return Polyline({start, end});
    throw Error(ErrorCode::ProviderUnreachable, "no routing provider configured");
  }
  try {
    return provider->route(start, end);
  } catch (const Error& e) {
    if (fallback && (e.code() == ErrorCode::NoRoute || e.code() == ErrorCode::ProviderUnreachable)) {
      return Polyline({start, end});
    }
    throw;
  }
}

std::optional<Attribution> attribute_pothole(const Pothole& p, std::span<const RoadSegment> segments,
                                             double max_dist_m) {
  std::optional<Attribution> best;
  for (const auto& s : segments) {
    const double d = point_to_polyline_m(p.position, s.geometry.span());
    if (d > max_dist_m) continue;
    if (!best || d < best->distance_m || (d == best->distance_m && s.id < best->segment_id)) {
      best = Attribution{s.id, d};
    }
  }
  return best;
}

}  // namespace roadwatch
