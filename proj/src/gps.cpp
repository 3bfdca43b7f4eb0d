#include "roadwatch/gps.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "roadwatch/error.hpp"

namespace roadwatch {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

[[noreturn]] void fail(ErrorCode code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

GpsTrack::GpsTrack(std::vector<GpsFix> fixes) : fixes_(std::move(fixes)) {
  if (fixes_.empty()) throw Error(ErrorCode::EmptyTrack, "GPS track has no fixes");
  for (std::size_t i = 1; i < fixes_.size(); ++i) {
    if (fixes_[i].utc <= fixes_[i - 1].utc) {
      throw Error(ErrorCode::NonMonotonicTime,
                  "fix " + std::to_string(i) + " is not after its predecessor");
    }
  }
}

std::optional<ClockOffset> parse_offset(std::string_view text) {
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  int parts[3];
  for (int i = 0; i < 3; ++i) {
    const auto colon = text.find(':');
    const auto field = i < 2 ? text.substr(0, colon) : text;
    if (field.size() < 2 || (i > 0 && field.size() != 2) || (i < 2 && colon == std::string_view::npos)) {
      return std::nullopt;
    }
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parts[i]);
    if (ec != std::errc{} || ptr != field.data() + field.size() || parts[i] < 0) {
      return std::nullopt;
    }
    if (i > 0 && parts[i] > 59) return std::nullopt;
    if (i < 2) text.remove_prefix(colon + 1);
  }
  std::chrono::seconds total = std::chrono::hours{parts[0]} + std::chrono::minutes{parts[1]} +
                               std::chrono::seconds{parts[2]};
  return ClockOffset{negative ? -total : total};
}

GpsTrack parse_gps_log(std::string_view csv) {
  std::vector<GpsFix> fixes;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  if (csv.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  while (pos < csv.size()) {
    auto nl = csv.find('\n', pos);
    std::string_view line = csv.substr(pos, nl == std::string_view::npos ? csv.npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() : nl + 1;
    ++line_no;
    line = trim(line);
    if (!header_seen) {
      const auto cols = split_commas(line);
      const bool base = cols.size() >= 3 && cols[0] == "utc_iso" && cols[1] == "lat" &&
                        cols[2] == "lon";
      const bool extra = cols.size() == 3 ||
                         (cols.size() == 4 && cols[3] == "heading") ||
                         (cols.size() == 5 && cols[3] == "heading" && cols[4] == "speed");
      if (!base || !extra) fail(ErrorCode::MalformedRow, line_no, "expected header utc_iso,lat,lon[,heading,speed]");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cols = split_commas(line);
    if (cols.size() < 3 || cols.size() > 5) fail(ErrorCode::MalformedRow, line_no, "wrong column count");
    GpsFix fix;
    const auto utc = parse_iso(cols[0]);
    if (!utc) fail(ErrorCode::MalformedRow, line_no, "bad utc_iso '" + std::string(cols[0]) + "'");
    fix.utc = *utc;
    const auto lat = to_double(cols[1]);
    const auto lon = to_double(cols[2]);
    if (!lat || !lon) fail(ErrorCode::MalformedRow, line_no, "bad coordinate");
    fix.position = {*lat, *lon};
    if (!valid_coordinate(fix.position)) {
      fail(ErrorCode::OutOfRangeCoordinate, line_no, "coordinate out of range");
    }
    if (cols.size() >= 4 && !cols[3].empty()) {
      fix.heading = to_double(cols[3]);
      if (!fix.heading || *fix.heading < 0.0 || *fix.heading >= 360.0) {
        fail(ErrorCode::MalformedRow, line_no, "bad heading");
      }
    }
    if (cols.size() == 5 && !cols[4].empty()) {
      fix.speed = to_double(cols[4]);
      if (!fix.speed || *fix.speed < 0.0) fail(ErrorCode::MalformedRow, line_no, "bad speed");
    }
    if (!fixes.empty() && fix.utc <= fixes.back().utc) {
      fail(ErrorCode::NonMonotonicTime, line_no, "timestamp not after previous row");
    }
    fixes.push_back(std::move(fix));
  }
  if (!header_seen) throw Error(ErrorCode::MalformedRow, "line 1: missing header");
  if (fixes.empty()) throw Error(ErrorCode::EmptyTrack, "GPS log has no fixes");
  return GpsTrack(std::move(fixes));
}

UtcInstant to_utc(const FrameTimestamp& frame, ClockOffset offset) {
  using namespace std::chrono;
  const year_month_day ymd{year{frame.year}, month{unsigned(frame.month)},
                           day{unsigned(frame.day)}};
  const sys_seconds local_as_utc =
      sys_days{ymd} + hours{frame.hour} + minutes{frame.minute} + seconds{frame.second};
  return UtcInstant{local_as_utc - offset.value};
}

LatLon locate(const GpsTrack& track, UtcInstant at, const LocateOptions& options) {
  const auto& fixes = track.fixes();
  if (fixes.empty()) throw Error(ErrorCode::EmptyTrack, "GPS track has no fixes");
  if (at < track.start() - options.edge_tolerance || at > track.end() + options.edge_tolerance) {
    throw Error(ErrorCode::OutsideTrackSpan, "instant " + format_iso(at) + " outside track span");
  }
  if (at <= track.start()) return round5(fixes.front().position);
  if (at >= track.end()) return round5(fixes.back().position);

  const auto upper = std::lower_bound(fixes.begin(), fixes.end(), at,
                                      [](const GpsFix& f, UtcInstant t) { return f.utc < t; });
  if (upper->utc == at) return round5(upper->position);
  const GpsFix& b = *upper;
  const GpsFix& a = *(upper - 1);
  const auto gap = b.utc - a.utc;
  if (gap > options.max_gap) {
    throw Error(ErrorCode::GapTooLarge,
                "bracketing fixes " + std::to_string(gap.count() / 1000.0) + " s apart");
  }
  if (std::abs(b.position.lon - a.position.lon) > 180.0) {
    throw Error(ErrorCode::AntimeridianCrossing, "track crosses the antimeridian");
  }
  const double f = double((at - a.utc).count()) / double(gap.count());
  return round5(LatLon{a.position.lat + f * (b.position.lat - a.position.lat),
                       a.position.lon + f * (b.position.lon - a.position.lon)});
}

}  // namespace roadwatch
