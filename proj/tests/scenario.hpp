#pragma once

#include <string>

#include "roadwatch/service.hpp"
#include "support.hpp"

namespace rwtest {

// One 150 m straight road; a drive that sees one pothole three times
// (batch A) and a later clean drive over the same road (batch B).
struct RepairLoop {
  static constexpr double kLat = 20.29610;
  static constexpr double kLon0 = 85.82450;
  static constexpr double kRoadM = 150.0;

  UtcInstant drive_a = at("2025-08-13T13:14:20Z");
  UtcInstant drive_b = at("2025-08-20T09:00:00Z");

  SegmentRequest segment() const {
    SegmentRequest r;
    const double dlon = kRoadM / (kEarthRadiusM * std::cos(kLat * M_PI / 180.0)) * 180.0 / M_PI;
    r.start = {kLat, kLon0};
    r.end = {kLat, round5(kLon0 + dlon)};
    r.mode = SegmentMode::Straight;
    r.contract = contract();
    r.category = "arterial";
    return r;
  }

  std::string gps_a() const { return gps_csv(drive_a, kLat, kLon0, 15); }
  std::string detections_a() const {
    std::string out;
    // ~30 fps: three frames inside the same overlay second, 50 m along.
    for (int i = 0; i < 3; ++i) {
      out += detection_line(1000 + i, drive_a + std::chrono::seconds{5}, {box()}, ClockOffset::dashcam_default(),
                            "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQDwAEhQGAhKmMIQAAAABJRU5ErkJggg==");
    }
    return out;
  }

  std::string gps_b() const { return gps_csv(drive_b, kLat, kLon0, 15); }
  std::string detections_b() const { return detection_line(2000, drive_b + std::chrono::seconds{5}, {}); }
};

}  // namespace rwtest
