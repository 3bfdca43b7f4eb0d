#pragma once

#include <chrono>
#include <optional>
#include <string_view>
#include <vector>

#include "roadwatch/geo.hpp"
#include "roadwatch/time.hpp"
#include "roadwatch/timestamp.hpp"

namespace roadwatch {

struct GpsFix {
  UtcInstant utc;
  LatLon position;
  std::optional<double> heading;  // carried, not used for geotagging
  std::optional<double> speed;

  friend bool operator==(const GpsFix&, const GpsFix&) = default;
};

/// Immutable, strictly time-ordered sequence of fixes.
class GpsTrack {
 public:
  GpsTrack() = default;
  /// Throws Error{EmptyTrack} for no fixes and Error{NonMonotonicTime} when
  /// the fixes are not strictly increasing in time.
  explicit GpsTrack(std::vector<GpsFix> fixes);

  const std::vector<GpsFix>& fixes() const noexcept { return fixes_; }
  bool empty() const noexcept { return fixes_.empty(); }
  UtcInstant start() const { return fixes_.front().utc; }
  UtcInstant end() const { return fixes_.back().utc; }

 private:
  std::vector<GpsFix> fixes_;
};

/// Signed duration such that utc = local frame time - offset.
struct ClockOffset {
  std::chrono::seconds value{0};

  /// The measured dashcam offset against the logger: 5h30m44s.
  static constexpr ClockOffset dashcam_default() {
    return {std::chrono::hours{5} + std::chrono::minutes{30} + std::chrono::seconds{44}};
  }
};

/// Accepts `[-]HH:MM:SS`.
std::optional<ClockOffset> parse_offset(std::string_view text);

struct LocateOptions {
  std::chrono::milliseconds max_gap{5000};
  std::chrono::milliseconds edge_tolerance{1000};
};

/// CSV with header `utc_iso,lat,lon[,heading,speed]`, LF or CRLF.
/// Errors carry the 1-based line number (the header is line 1).
GpsTrack parse_gps_log(std::string_view csv);

/// Treats the frame clock reading as a UTC-labelled instant and subtracts
/// the offset. Integer-second arithmetic only.
UtcInstant to_utc(const FrameTimestamp& frame, ClockOffset offset);

/// Position at `at`, linearly interpolated between the bracketing fixes and
/// rounded to five decimals. Instants just outside the track (within
/// edge_tolerance) clamp to the end fix; nothing is extrapolated.
LatLon locate(const GpsTrack& track, UtcInstant at, const LocateOptions& options = {});

}  // namespace roadwatch
