#include "roadwatch/detection.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "roadwatch/crypto.hpp"
#include "roadwatch/error.hpp"

namespace roadwatch {

using nlohmann::json;

std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::Minor: return "minor";
    case Severity::Moderate: return "moderate";
    case Severity::Severe: return "severe";
  }
  return "minor";
}

std::optional<Severity> severity_from_string(std::string_view s) noexcept {
  if (s == "minor") return Severity::Minor;
  if (s == "moderate") return Severity::Moderate;
  if (s == "severe") return Severity::Severe;
  return std::nullopt;
}

std::int64_t IngestStats::skipped_boxes() const {
  std::int64_t n = 0;
  for (const auto& [_, count] : skipped) n += count;
  return n;
}

void to_json(json& j, const IngestStats& s) {
  j = json{{"frames", s.frames},
           {"boxes", s.boxes},
           {"observations", s.observations},
           {"thumbnails_rejected", s.thumbnails_rejected},
           {"skipped", s.skipped},
           {"skipped_frames", s.skipped_frames}};
}

void to_json(json& j, const Observation& o) {
  j = json{{"lat", o.position.lat},
           {"lon", o.position.lon},
           {"observed_at", format_iso(o.observed_at)},
           {"severity", to_string(o.severity)},
           {"confidence", o.confidence},
           {"thumbnail", o.thumbnail ? json(*o.thumbnail) : json(nullptr)},
           {"source_frame", o.source_frame}};
}

Severity grade_severity(const BoundingBox& box, int frame_w, int frame_h,
                        const SeverityThresholds& thresholds) {
  const double area = box.w * box.h;
  if (!(box.w > 0.0) || !(box.h > 0.0) || !(area > 0.0)) {
    throw Error(ErrorCode::DegenerateBox, "bounding box has zero area");
  }
  const double ratio = area / (double(frame_w) * double(frame_h));
  if (ratio < thresholds.moderate) return Severity::Minor;
  if (ratio < thresholds.severe) return Severity::Moderate;
  return Severity::Severe;
}

namespace {

DetectionRecord record_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("line is not a JSON object");
  DetectionRecord r;
  r.frame_id = j.at("frame_id").get<std::int64_t>();
  const auto& text = j.at("raw_timestamp_text");
  r.raw_timestamp_text = text.is_null() ? std::string{} : text.get<std::string>();
  r.frame_w = j.at("frame_w").get<int>();
  r.frame_h = j.at("frame_h").get<int>();
  if (r.frame_w <= 0 || r.frame_h <= 0) throw std::invalid_argument("frame_w/frame_h must be > 0");
  for (const auto& b : j.at("boxes")) {
    BoundingBox box;
    box.x = b.at("x").get<double>();
    box.y = b.at("y").get<double>();
    box.w = b.at("w").get<double>();
    box.h = b.at("h").get<double>();
    box.confidence = b.at("confidence").get<double>();
    if (!(box.confidence >= 0.0 && box.confidence <= 1.0)) {
      throw std::invalid_argument("confidence outside [0, 1]");
    }
    r.boxes.push_back(box);
  }
  if (auto it = j.find("thumbnail"); it != j.end() && !it->is_null()) {
    auto thumb = it->get<std::string>();
    if (!crypto::is_base64(thumb)) throw std::invalid_argument("thumbnail is not valid Base64");
    if (!thumb.empty()) r.thumbnail = std::move(thumb);
  }
  return r;
}

bool box_in_frame(const BoundingBox& b, int w, int h) {
  return b.x >= 0.0 && b.y >= 0.0 && b.x + b.w <= w && b.y + b.h <= h;
}

}  // namespace

std::vector<DetectionRecord> parse_detections(std::string_view jsonl) {
  std::vector<DetectionRecord> records;
  std::vector<std::string> problems;
  std::size_t pos = 0, line_no = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    std::string_view line = jsonl.substr(pos, nl == std::string_view::npos ? jsonl.npos : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      records.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) {
      if (!msg.empty()) msg += "; ";
      msg += p;
    }
    throw Error(ErrorCode::MalformedDetections, msg);
  }
  return records;
}

GeotagResult geotag_batch(const std::vector<DetectionRecord>& records, const GpsTrack& track,
                          ClockOffset offset, const DetectionOptions& options) {
  if (track.empty()) throw Error(ErrorCode::EmptyTrack, "GPS track has no fixes");
  GeotagResult result;
  IngestStats& stats = result.stats;

  struct Keyed {
    Observation obs;
    std::size_t order;
  };
  std::vector<Keyed> staged;

  auto skip_frame = [&](const DetectionRecord& r, const std::string& cls) {
    stats.skipped_frames[cls] += 1;
    if (!r.boxes.empty()) stats.skipped[cls] += static_cast<std::int64_t>(r.boxes.size());
  };

  for (const auto& record : records) {
    ++stats.frames;
    stats.boxes += static_cast<std::int64_t>(record.boxes.size());

    const std::string text = repair_ocr_text(record.raw_timestamp_text, options.misreads);
    if (text.empty()) {
      skip_frame(record, "empty_text");
      continue;
    }
    FrameTimestamp ts;
    LatLon where;
    UtcInstant utc;
    try {
      ts = parse_timestamp(text);
      utc = to_utc(ts, offset);
      where = locate(track, utc, options.locate);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::MalformedTimestamp: skip_frame(record, "malformed_timestamp"); break;
        case ErrorCode::InvalidDate: skip_frame(record, "invalid_timestamp"); break;
        case ErrorCode::OutsideTrackSpan: skip_frame(record, "outside_track"); break;
        case ErrorCode::GapTooLarge: skip_frame(record, "gap_too_large"); break;
        case ErrorCode::AntimeridianCrossing: skip_frame(record, "antimeridian"); break;
        default: throw;
      }
      continue;
    }

    std::optional<std::string> thumbnail = record.thumbnail;
    if (thumbnail && thumbnail->size() > options.thumbnail_cap) {
      thumbnail.reset();
      ++stats.thumbnails_rejected;
    }

    for (const auto& box : record.boxes) {
      if (!(box.w > 0.0) || !(box.h > 0.0)) {
        stats.skipped["degenerate_box"] += 1;
        continue;
      }
      if (!box_in_frame(box, record.frame_w, record.frame_h)) {
        stats.skipped["box_out_of_frame"] += 1;
        continue;
      }
      if (box.confidence < options.confidence_floor) {
        stats.skipped["low_confidence"] += 1;
        continue;
      }
      Observation obs;
      obs.position = where;
      obs.observed_at = utc;
      obs.severity = grade_severity(box, record.frame_w, record.frame_h, options.severity);
      obs.confidence = box.confidence;
      obs.thumbnail = thumbnail;
      obs.source_frame = record.frame_id;
      staged.push_back({std::move(obs), staged.size()});
    }
  }

  std::stable_sort(staged.begin(), staged.end(), [](const Keyed& a, const Keyed& b) {
    if (a.obs.observed_at != b.obs.observed_at) return a.obs.observed_at < b.obs.observed_at;
    if (a.obs.source_frame != b.obs.source_frame) return a.obs.source_frame < b.obs.source_frame;
    return a.order < b.order;
  });
  result.observations.reserve(staged.size());
  for (auto& k : staged) result.observations.push_back(std::move(k.obs));
  stats.observations = static_cast<std::int64_t>(result.observations.size());
  return result;
}

}  // namespace roadwatch
