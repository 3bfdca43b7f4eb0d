#include <gtest/gtest.h>

#include <random>

#include "roadwatch/error.hpp"
#include "roadwatch/gps.hpp"
#include "support.hpp"
#include "timestamp_gen.hpp"

using namespace roadwatch;
using rwtest::at;

namespace {

template <typename Fn>
std::pair<ErrorCode, std::string> failure(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return {e.code(), e.what()};
  }
  return {ErrorCode::Internal, "no error"};
}

// Civil-from-days arithmetic written out independently of <chrono>.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

GpsTrack two_fix_track(int gap_s = 10) {
  return GpsTrack({GpsFix{at("2025-08-13T13:14:20Z"), {20.00000, 85.00000}},
                   GpsFix{at("2025-08-13T13:14:20Z") + std::chrono::seconds{gap_s}, {20.00010, 85.00000}}});
}

}  // namespace

TEST(ParseGpsLog, TwoRows) {
  const auto track = parse_gps_log("utc_iso,lat,lon\n2025-08-13T13:14:25Z,20.29610,85.82450\n"
                                   "2025-08-13T13:14:26Z,20.29611,85.82452\n");
  ASSERT_EQ(track.fixes().size(), 2u);
  EXPECT_EQ(track.start(), at("2025-08-13T13:14:25Z"));
  EXPECT_DOUBLE_EQ(track.fixes()[0].position.lat, 20.29610);
  EXPECT_DOUBLE_EQ(track.fixes()[1].position.lon, 85.82452);
  EXPECT_FALSE(track.fixes()[0].heading);
}

TEST(ParseGpsLog, OptionalColumnsCrlfAndBom) {
  const auto track = parse_gps_log("\xEF\xBB\xBFutc_iso,lat,lon,heading,speed\r\n"
                                   "2025-08-13T13:14:25Z,20.29610,85.82450,90.5,11.2\r\n"
                                   "2025-08-13T13:14:26.500Z,20.29611,85.82452,,\r\n");
  ASSERT_EQ(track.fixes().size(), 2u);
  EXPECT_DOUBLE_EQ(*track.fixes()[0].heading, 90.5);
  EXPECT_DOUBLE_EQ(*track.fixes()[0].speed, 11.2);
  EXPECT_FALSE(track.fixes()[1].heading);
  EXPECT_EQ(track.end(), at("2025-08-13T13:14:26.500Z"));
}

TEST(ParseGpsLog, RowErrorsCarryLineNumbers) {
  const std::string header = "utc_iso,lat,lon\n";
  auto [c1, m1] = failure([&] { parse_gps_log(header + "2025-08-13T13:14:25Z,91.0,85.0\n"); });
  EXPECT_EQ(c1, ErrorCode::OutOfRangeCoordinate);
  EXPECT_NE(m1.find("line 2"), std::string::npos) << m1;

  auto [c2, m2] = failure([&] {
    parse_gps_log(header + "2025-08-13T13:14:26Z,20,85\n2025-08-13T13:14:25Z,20,85\n");
  });
  EXPECT_EQ(c2, ErrorCode::NonMonotonicTime);
  EXPECT_NE(m2.find("line 3"), std::string::npos) << m2;

  auto [c3, _3] = failure([&] {
    parse_gps_log(header + "2025-08-13T13:14:25Z,20,85\n2025-08-13T13:14:25Z,20,85.1\n");
  });
  EXPECT_EQ(c3, ErrorCode::NonMonotonicTime);

  auto [c4, m4] = failure([&] { parse_gps_log(header + "2025-08-13 13:14:25,20,85\n"); });
  EXPECT_EQ(c4, ErrorCode::MalformedRow);
  EXPECT_NE(m4.find("line 2"), std::string::npos);

  EXPECT_EQ(failure([&] { parse_gps_log(header + "2025-08-13T13:14:25Z,20\n"); }).first, ErrorCode::MalformedRow);
  EXPECT_EQ(failure([&] { parse_gps_log(header + "2025-08-13T13:14:25Z,x,85\n"); }).first, ErrorCode::MalformedRow);
  EXPECT_EQ(failure([&] { parse_gps_log(header + "2025-08-13T13:14:25Z,20,85,360,1\n"); }).first,
            ErrorCode::MalformedRow);
  EXPECT_EQ(failure([&] { parse_gps_log(header + "2025-08-13T13:14:25Z,20,85,10,-1\n"); }).first,
            ErrorCode::MalformedRow);
}

TEST(ParseGpsLog, HeaderAndEmptiness) {
  EXPECT_EQ(failure([] { parse_gps_log("time,lat,lon\n2025-08-13T13:14:25Z,20,85\n"); }).first,
            ErrorCode::MalformedRow);
  EXPECT_EQ(failure([] { parse_gps_log(""); }).first, ErrorCode::MalformedRow);
  EXPECT_EQ(failure([] { parse_gps_log("utc_iso,lat,lon\n"); }).first, ErrorCode::EmptyTrack);
  EXPECT_EQ(failure([] { GpsTrack(std::vector<GpsFix>{}); }).first, ErrorCode::EmptyTrack);
}

TEST(ClockOffset, ParseForms) {
  EXPECT_EQ(parse_offset("05:30:44")->value, ClockOffset::dashcam_default().value);
  EXPECT_EQ(parse_offset("-01:00:00")->value, std::chrono::seconds{-3600});
  EXPECT_EQ(parse_offset("00:00:00")->value, std::chrono::seconds{0});
  for (const char* bad : {"", "5:30:44", "05:30", "05:60:00", "05:30:60", "+05:30:44", "05-30-44"}) {
    EXPECT_FALSE(parse_offset(bad)) << bad;
  }
}

TEST(ToUtc, MeasuredOffset) {
  const auto offset = ClockOffset::dashcam_default();
  EXPECT_EQ(to_utc(FrameTimestamp{13, 8, 2025, 12, 0, 44}, offset), at("2025-08-13T06:30:00Z"));
}

TEST(ToUtc, ZeroOffsetIsIdentity) {
  EXPECT_EQ(to_utc(FrameTimestamp{13, 8, 2025, 12, 0, 44}, ClockOffset{}), at("2025-08-13T12:00:44Z"));
}

TEST(ToUtc, CalendarRollover) {
  const auto offset = ClockOffset::dashcam_default();
  EXPECT_EQ(to_utc(FrameTimestamp{1, 1, 2025, 2, 0, 0}, offset), at("2024-12-31T20:29:16Z"));
  EXPECT_EQ(to_utc(FrameTimestamp{1, 3, 2024, 1, 0, 0}, offset), at("2024-02-29T19:29:16Z"));
}

TEST(ToUtc, AgreesWithCivilArithmeticOracle) {
  rwtest::TimestampGen gen(21);
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> offsets(-14 * 3600, 14 * 3600);
  for (int i = 0; i < 5000; ++i) {
    const auto t = gen.timestamp();
    const ClockOffset offset{std::chrono::seconds{offsets(rng)}};
    const std::int64_t want_s = days_from_civil(t.year, t.month, t.day) * 86400 + t.hour * 3600 + t.minute * 60 +
                                t.second - offset.value.count();
    const UtcInstant got = to_utc(t, offset);
    ASSERT_EQ(to_epoch_ms(got), want_s * 1000) << render(t);
    // Invertible: adding the offset back gives the frame reading.
    ASSERT_EQ(to_epoch_ms(got + offset.value) / 1000,
              days_from_civil(t.year, t.month, t.day) * 86400 + t.hour * 3600 + t.minute * 60 + t.second);
  }
}

TEST(Locate, LinearMidpoint) {
  // The fixes are 10 s apart, beyond the default max_gap.
  LocateOptions options;
  options.max_gap = std::chrono::seconds{10};
  const auto p = locate(two_fix_track(), at("2025-08-13T13:14:25Z"), options);
  EXPECT_DOUBLE_EQ(p.lat, 20.00005);
  EXPECT_DOUBLE_EQ(p.lon, 85.00000);
}

TEST(Locate, ExactHitReturnsFix) {
  const GpsTrack track({GpsFix{at("2025-08-13T13:14:20Z"), {20.12345, 85.54321}},
                        GpsFix{at("2025-08-13T13:14:21Z"), {20.12346, 85.54322}},
                        GpsFix{at("2025-08-13T13:14:22Z"), {20.12348, 85.54325}}});
  for (const auto& f : track.fixes()) {
    EXPECT_EQ(locate(track, f.utc), f.position);
  }
}

TEST(Locate, GapTooLarge) {
  LocateOptions options;
  options.max_gap = std::chrono::seconds{5};
  EXPECT_EQ(failure([&] { locate(two_fix_track(8), at("2025-08-13T13:14:24Z"), options); }).first,
            ErrorCode::GapTooLarge);
  EXPECT_NO_THROW(locate(two_fix_track(5), at("2025-08-13T13:14:22Z"), options));
}

TEST(Locate, EdgeToleranceClampsWithoutExtrapolating) {
  const auto track = two_fix_track();
  EXPECT_EQ(locate(track, at("2025-08-13T13:14:19.500Z")), (LatLon{20.0, 85.0}));
  EXPECT_EQ(locate(track, at("2025-08-13T13:14:31Z")), (LatLon{20.0001, 85.0}));
  EXPECT_EQ(failure([&] { locate(track, at("2025-08-13T13:14:18.999Z")); }).first, ErrorCode::OutsideTrackSpan);
  EXPECT_EQ(failure([&] { locate(track, at("2025-08-13T13:14:31.001Z")); }).first, ErrorCode::OutsideTrackSpan);
}

TEST(Locate, SingleFixTrack) {
  const GpsTrack track({GpsFix{at("2025-08-13T13:14:20Z"), {20.0, 85.0}}});
  EXPECT_EQ(locate(track, at("2025-08-13T13:14:20.400Z")), (LatLon{20.0, 85.0}));
}

TEST(Locate, AntimeridianIsRefused) {
  const GpsTrack track({GpsFix{at("2025-08-13T13:14:20Z"), {0.0, 179.99999}},
                        GpsFix{at("2025-08-13T13:14:21Z"), {0.0, -179.99999}}});
  EXPECT_EQ(failure([&] { locate(track, at("2025-08-13T13:14:20.500Z")); }).first,
            ErrorCode::AntimeridianCrossing);
}

TEST(Locate, BoundedAndContinuous) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> step(-0.0002, 0.0002);
  std::vector<GpsFix> fixes;
  LatLon p{20.3, 85.8};
  const UtcInstant t0 = at("2025-08-13T13:00:00Z");
  for (int s = 0; s < 60; ++s) {
    fixes.push_back({t0 + std::chrono::seconds{s}, round5(p)});
    p = {p.lat + step(rng), p.lon + step(rng)};
  }
  const GpsTrack track(fixes);
  LatLon previous = locate(track, t0);
  for (int ms = 0; ms < 59000; ms += 37) {
    const UtcInstant when = t0 + std::chrono::milliseconds{ms};
    const auto& a = fixes[ms / 1000];
    const auto& b = fixes[ms / 1000 + 1];
    const LatLon got = locate(track, when);
    const double q = 0.5e-5 + 1e-12;
    ASSERT_GE(got.lat, std::min(a.position.lat, b.position.lat) - q);
    ASSERT_LE(got.lat, std::max(a.position.lat, b.position.lat) + q);
    ASSERT_GE(got.lon, std::min(a.position.lon, b.position.lon) - q);
    ASSERT_LE(got.lon, std::max(a.position.lon, b.position.lon) + q);
    // 37 ms at <= 0.0002 deg/s moves < 1e-5 deg plus one rounding quantum.
    ASSERT_LE(std::abs(got.lat - previous.lat), 2e-5 + 1e-12);
    ASSERT_LE(std::abs(got.lon - previous.lon), 2e-5 + 1e-12);
    // Linear oracle in long double.
    const long double f = (ms % 1000) / 1000.0L;
    const double want_lat = round5(double(a.position.lat + f * (b.position.lat - a.position.lat)));
    ASSERT_NEAR(got.lat, want_lat, 1e-9);
    previous = got;
  }
}
