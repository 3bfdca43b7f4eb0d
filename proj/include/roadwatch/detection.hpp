#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roadwatch/gps.hpp"
#include "roadwatch/timestamp.hpp"

namespace roadwatch {

struct BoundingBox {
  double x = 0, y = 0, w = 0, h = 0;
  double confidence = 0;
};

struct DetectionRecord {
  std::int64_t frame_id = 0;
  std::string raw_timestamp_text;
  int frame_w = 0;
  int frame_h = 0;
  std::vector<BoundingBox> boxes;
  std::optional<std::string> thumbnail;  // Base64
};

enum class Severity { Minor = 0, Moderate = 1, Severe = 2 };

std::string_view to_string(Severity s) noexcept;
std::optional<Severity> severity_from_string(std::string_view s) noexcept;

struct Observation {
  LatLon position;  // five-decimal precision
  UtcInstant observed_at;
  Severity severity = Severity::Minor;
  double confidence = 0;
  std::optional<std::string> thumbnail;
  std::int64_t source_frame = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Relative-area cut points: r < moderate is Minor, r < severe is Moderate,
/// anything larger is Severe.
struct SeverityThresholds {
  double moderate = 0.005;
  double severe = 0.02;
};

struct DetectionOptions {
  SeverityThresholds severity;
  double confidence_floor = 0.25;
  std::size_t thumbnail_cap = 64 * 1024;  // bytes of Base64 text
  LocateOptions locate;
  MisreadTable misreads;
};

/// Per-class skip counters. `skipped` counts boxes (so that observations plus
/// all skipped boxes equals the input box count); `skipped_frames` counts
/// records that failed a frame-level stage.
struct IngestStats {
  std::int64_t frames = 0;
  std::int64_t boxes = 0;
  std::int64_t observations = 0;
  std::int64_t thumbnails_rejected = 0;
  std::map<std::string, std::int64_t> skipped;
  std::map<std::string, std::int64_t> skipped_frames;

  std::int64_t skipped_boxes() const;
};

void to_json(nlohmann::json& j, const IngestStats& s);
void to_json(nlohmann::json& j, const Observation& o);

/// Throws Error{DegenerateBox} when the box has zero area.
Severity grade_severity(const BoundingBox& box, int frame_w, int frame_h,
                        const SeverityThresholds& thresholds = {});

/// One DetectionRecord per non-blank line. All malformed lines are collected
/// and reported together in one Error{MalformedDetections}.
std::vector<DetectionRecord> parse_detections(std::string_view jsonl);

struct GeotagResult {
  std::vector<Observation> observations;  // sorted by (observed_at, source_frame)
  IngestStats stats;
};

/// Repairs and parses each frame timestamp, shifts it to UTC, locates it on
/// the track and emits one graded observation per surviving box.
GeotagResult geotag_batch(const std::vector<DetectionRecord>& records, const GpsTrack& track,
                          ClockOffset offset, const DetectionOptions& options = {});

}  // namespace roadwatch
