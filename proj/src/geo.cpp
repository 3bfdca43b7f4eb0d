#include "roadwatch/geo.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace roadwatch {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

double haversine_m(const LatLon& a, const LatLon& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s_phi = std::sin(dphi / 2.0);
  const double s_lambda = std::sin(dlambda / 2.0);
  double h = s_phi * s_phi + std::cos(phi1) * std::cos(phi2) * s_lambda * s_lambda;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double polyline_length_m(std::span<const LatLon> vertices) {
  double total = 0.0;
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    total += haversine_m(vertices[i - 1], vertices[i]);
  }
  return total;
}

LatLon foot_point(const LatLon& p, const LatLon& a, const LatLon& b) {
  // Meters east/north of p.
  const double kx = kEarthRadiusM * kDegToRad * std::cos(p.lat * kDegToRad);
  const double ky = kEarthRadiusM * kDegToRad;
  const double ax = (a.lon - p.lon) * kx, ay = (a.lat - p.lat) * ky;
  const double bx = (b.lon - p.lon) * kx, by = (b.lat - p.lat) * ky;
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(-(ax * dx + ay * dy) / len2, 0.0, 1.0);
  return {a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon)};
}

double point_to_leg_m(const LatLon& p, const LatLon& a, const LatLon& b) {
  return haversine_m(p, foot_point(p, a, b));
}

double point_to_polyline_m(const LatLon& p, std::span<const LatLon> vertices) {
  if (vertices.empty()) return std::numeric_limits<double>::infinity();
  if (vertices.size() == 1) return haversine_m(p, vertices.front());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    best = std::min(best, point_to_leg_m(p, vertices[i - 1], vertices[i]));
  }
  return best;
}

}  // namespace roadwatch
