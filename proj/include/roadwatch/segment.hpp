#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadwatch/dedupe.hpp"
#include "roadwatch/geo.hpp"
#include "roadwatch/time.hpp"

namespace roadwatch {

/// Road condition color. Ordered for escalation: Green < Yellow < Orange < Red.
enum class HealthState { Green = 0, Yellow = 1, Orange = 2, Red = 3 };

std::string_view to_string(HealthState h) noexcept;
std::optional<HealthState> health_from_string(std::string_view s) noexcept;

/// Ordered vertex list. Consecutive duplicates are dropped on construction;
/// fewer than two distinct vertices or an invalid coordinate throws
/// Error{InvalidGeometry}.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<LatLon> vertices);

  const std::vector<LatLon>& vertices() const noexcept { return vertices_; }
  std::span<const LatLon> span() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }

  friend bool operator==(const Polyline&, const Polyline&) = default;

 private:
  std::vector<LatLon> vertices_;
};

double polyline_length_m(const Polyline& p);

struct ContractMetadata {
  std::string contractor_name;
  std::string contractor_contact;
  Date construction_date{};
  double budget = 0;
  Date warranty_end{};

  friend bool operator==(const ContractMetadata&, const ContractMetadata&) = default;
};

/// Throws Error{InvalidContract}.
void validate(const ContractMetadata& c);

enum class SegmentMode { Routed, Straight };

std::string_view to_string(SegmentMode m) noexcept;
std::optional<SegmentMode> mode_from_string(std::string_view s) noexcept;

struct RoadSegment {
  std::int64_t id = 0;
  LatLon start;
  LatLon end;
  SegmentMode mode = SegmentMode::Straight;
  Polyline geometry;
  ContractMetadata contract;
  HealthState health = HealthState::Green;
  double length_m = 0;
  std::string created_by;
  std::optional<std::string> category;
  std::int64_t version = 0;

  friend bool operator==(const RoadSegment&, const RoadSegment&) = default;
};

/// Source of road-following geometry between two points.
class RoutingProvider {
 public:
  virtual ~RoutingProvider() = default;
  /// Throws Error{ProviderUnreachable} or Error{NoRoute}.
  virtual Polyline route(const LatLon& start, const LatLon& end) = 0;
};

/// Path and query of an OSRM route request (lon-first on the wire).
std::string osrm_route_target(const LatLon& start, const LatLon& end);

/// Extracts the first route's GeoJSON geometry from an OSRM response body,
/// swapping to lat-first order. Throws Error{NoRoute} when code != "Ok".
Polyline parse_osrm_response(std::string_view body);

/// OSRM-compatible HTTP client. `base_url` is e.g. "http://localhost:5000".
class OsrmRouter final : public RoutingProvider {
 public:
  explicit OsrmRouter(std::string base_url, int timeout_seconds = 10);
  Polyline route(const LatLon& start, const LatLon& end) override;

 private:
  std::string base_url_;
  int timeout_seconds_;
};

/// Builds geometry for a segment. Routed mode asks the provider; on NoRoute
/// (or no provider) it falls back to a straight line only when `fallback`
/// is set.
Polyline build_geometry(const LatLon& start, const LatLon& end, SegmentMode mode, bool fallback,
                        RoutingProvider* provider);

struct Attribution {
  std::int64_t segment_id;
  double distance_m;
};

inline constexpr double kAttributionRadiusM = 15.0;

/// Nearest segment within `max_dist_m` of the pothole, ties to the smaller id.
std::optional<Attribution> attribute_pothole(const Pothole& p, std::span<const RoadSegment> segments,
                                             double max_dist_m = kAttributionRadiusM);

}  // namespace roadwatch
