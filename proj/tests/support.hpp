#pragma once

#include <unistd.h>

#include <array>
#include <atomic>
#include <cmath>
#include <deque>
#include <filesystem>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadwatch/config.hpp"
#include "roadwatch/error.hpp"
#include "roadwatch/governance.hpp"
#include "roadwatch/segment.hpp"
#include "roadwatch/store.hpp"

namespace rwtest {

using namespace roadwatch;
using namespace std::chrono_literals;

inline UtcInstant at(const char* iso) {
  auto t = parse_iso(iso);
  if (!t) throw std::invalid_argument(iso);
  return *t;
}

inline Date day(const char* ymd) {
  auto d = parse_date(ymd);
  if (!d) throw std::invalid_argument(ymd);
  return *d;
}

// Independent great-circle distance: angle between ECEF unit vectors.
inline double vector_distance_m(LatLon a, LatLon b) {
  constexpr long double kDeg = 3.14159265358979323846264338327950288L / 180.0L;
  auto unit = [&](LatLon p) {
    const long double la = p.lat * kDeg, lo = p.lon * kDeg;
    return std::array<long double, 3>{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
  };
  const auto u = unit(a), v = unit(b);
  const long double cx = u[1] * v[2] - u[2] * v[1];
  const long double cy = u[2] * v[0] - u[0] * v[2];
  const long double cz = u[0] * v[1] - u[1] * v[0];
  const long double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  return double(6371000.0L * std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot));
}

inline ContractMetadata contract(const char* warranty_end = "2030-12-31", const char* name = "Kalinga Roads") {
  ContractMetadata c;
  c.contractor_name = name;
  c.contractor_contact = "ops@kalinga.example";
  c.construction_date = day("2024-01-15");
  c.budget = 12500000;
  c.warranty_end = day(warranty_end);
  return c;
}

// Straight segment eastwards along `lat` from `lon0`, `metres` long.
inline RoadSegment straight_segment(double lat, double lon0, double metres, const char* warranty_end = "2030-12-31") {
  RoadSegment s;
  const double dlon = metres / (kEarthRadiusM * std::cos(lat * M_PI / 180.0)) * 180.0 / M_PI;
  s.start = {lat, lon0};
  s.end = {lat, lon0 + dlon};
  s.mode = SegmentMode::Straight;
  s.geometry = Polyline({s.start, s.end});
  s.length_m = polyline_length_m(s.geometry);
  s.contract = contract(warranty_end);
  s.created_by = "test";
  return s;
}

inline Pothole pothole(std::int64_t id, LatLon where, UtcInstant seen, PotholeStatus status = PotholeStatus::Active) {
  Pothole p;
  p.id = id;
  p.position = where;
  p.first_seen = p.last_seen = seen;
  p.status = status;
  return p;
}

inline Observation observation(LatLon where, UtcInstant t, std::int64_t frame = 0,
                               Severity severity = Severity::Minor) {
  Observation o;
  o.position = where;
  o.observed_at = t;
  o.severity = severity;
  o.confidence = 0.9;
  o.source_frame = frame;
  return o;
}

// Records payloads; returns scripted statuses then `fallback`.
struct StubSink final : NotificationSink {
  std::deque<int> script;
  int fallback = 200;
  std::vector<nlohmann::json> received;
  int deliver(const nlohmann::json& body) override {
    received.push_back(body);
    if (script.empty()) return fallback;
    const int s = script.front();
    script.pop_front();
    return s;
  }
};

struct StubRouter final : RoutingProvider {
  std::vector<LatLon> vertices;
  std::optional<ErrorCode> fail;
  int calls = 0;
  Polyline route(const LatLon& a, const LatLon& b) override {
    ++calls;
    if (fail) throw Error(*fail, "stubbed failure");
    if (vertices.empty()) return Polyline({a, b});
    return Polyline(vertices);
  }
};

inline Config quiet_config() {
  Config c;
  c.password_strength = crypto::HashStrength::Minimal;
  c.governance.backoff_base = std::chrono::milliseconds{0};
  c.governance.authority_recipients = {"roads@city.example"};
  c.governance.escalation_recipients = {"chief-engineer@state.example"};
  return c;
}

// Temporary directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("roadwatch-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Eastward GPS log at `speed_mps` along `lat`, one fix per second.
inline std::string gps_csv(UtcInstant start, double lat, double lon0, int seconds, double speed_mps = 10.0) {
  std::string out = "utc_iso,lat,lon\n";
  const double dlon = speed_mps / (kEarthRadiusM * std::cos(lat * M_PI / 180.0)) * 180.0 / M_PI;
  char buf[96];
  for (int s = 0; s <= seconds; ++s) {
    std::snprintf(buf, sizeof buf, "%s,%.5f,%.5f\n", format_iso(start + std::chrono::seconds{s}).c_str(), lat,
                  lon0 + dlon * s);
    out += buf;
  }
  return out;
}

// Detection line whose frame clock reads `utc + offset`.
inline std::string detection_line(std::int64_t frame, UtcInstant utc, std::vector<BoundingBox> boxes,
                                  ClockOffset offset = ClockOffset::dashcam_default(),
                                  const std::optional<std::string>& thumbnail = std::nullopt) {
  const auto local = std::chrono::floor<std::chrono::seconds>(utc) + offset.value;
  const auto dp = std::chrono::floor<std::chrono::days>(local);
  const std::chrono::year_month_day ymd{dp};
  const std::chrono::hh_mm_ss hms{local - dp};
  char text[32];
  std::snprintf(text, sizeof text, "%02u-%02u-%04d %02ld:%02ld:%02ld", unsigned(ymd.day()), unsigned(ymd.month()),
                int(ymd.year()), long(hms.hours().count()), long(hms.minutes().count()),
                long(hms.seconds().count()));
  nlohmann::json j{{"frame_id", frame}, {"raw_timestamp_text", text}, {"frame_w", 1920}, {"frame_h", 1080}};
  j["boxes"] = nlohmann::json::array();
  for (const auto& b : boxes) {
    j["boxes"].push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"confidence", b.confidence}});
  }
  if (thumbnail) j["thumbnail"] = *thumbnail;
  return j.dump() + "\n";
}

inline BoundingBox box(double w = 120, double h = 90, double confidence = 0.9) {
  return BoundingBox{800, 600, w, h, confidence};
}

}  // namespace rwtest
