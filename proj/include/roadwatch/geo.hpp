#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace roadwatch {

/// Mean Earth radius in meters.
inline constexpr double kEarthRadiusM = 6'371'000.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline bool valid_coordinate(const LatLon& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

/// Persisted coordinate precision: five decimal places (~1.1 m).
inline double round5(double deg) { return std::round(deg * 1e5) / 1e5; }
inline LatLon round5(LatLon p) { return {round5(p.lat), round5(p.lon)}; }

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const LatLon& a, const LatLon& b);

/// Sum of haversine_m over consecutive vertices.
double polyline_length_m(std::span<const LatLon> vertices);

/// Closest point on the leg [a, b] to p. The foot point is found in a local
/// equirectangular projection centered at p.
LatLon foot_point(const LatLon& p, const LatLon& a, const LatLon& b);

/// Haversine distance from p to its foot point on the leg [a, b].
double point_to_leg_m(const LatLon& p, const LatLon& a, const LatLon& b);

/// Minimum point_to_leg_m over all legs. A single-vertex input degenerates to
/// the point distance.
double point_to_polyline_m(const LatLon& p, std::span<const LatLon> vertices);

}  // namespace roadwatch
