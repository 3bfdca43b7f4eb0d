#include <gtest/gtest.h>

#include "roadwatch/error.hpp"
#include "roadwatch/timestamp.hpp"
#include "timestamp_gen.hpp"

using namespace roadwatch;

namespace {

ErrorCode parse_error(std::string_view s) {
  try {
    parse_timestamp(s);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST(RepairOcrText, IdentityOnCanonicalText) {
  EXPECT_EQ(repair_ocr_text("13-08-2025 18:45:09"), "13-08-2025 18:45:09");
}

TEST(RepairOcrText, DotsInTimeBecomeColons) {
  EXPECT_EQ(repair_ocr_text("13-08-2025 18.45.09"), "13-08-2025 18:45:09");
  EXPECT_EQ(repair_ocr_text("13-08-2025 18:45.09"), "13-08-2025 18:45:09");
}

TEST(RepairOcrText, OnesInSeparatorPositionsAreRebuilt) {
  EXPECT_EQ(repair_ocr_text("1310812025 18:45:09"), "13-08-2025 18:45:09");
  EXPECT_EQ(repair_ocr_text("13108-2025 18:45:09"), "13-08-2025 18:45:09");
  EXPECT_EQ(repair_ocr_text("13/0812025 18:45:09"), "13-08-2025 18:45:09");
}

TEST(RepairOcrText, SlashDatesNormalized) {
  EXPECT_EQ(repair_ocr_text("13/08/2025 18:45:09"), "13-08-2025 18:45:09");
}

TEST(RepairOcrText, FractionalSecondsTruncated) {
  EXPECT_EQ(repair_ocr_text("13-08-2025 18:45:09.500"), "13-08-2025 18:45:09");
  EXPECT_EQ(repair_ocr_text("13-08-2025 18:45:09.999"), "13-08-2025 18:45:09");
  EXPECT_EQ(repair_ocr_text("13-08-2025 18:45:09,5"), "13-08-2025 18:45:09");
  EXPECT_EQ(parse_timestamp(repair_ocr_text("13-08-2025 18:45:09.500")),
            parse_timestamp("13-08-2025 18:45:09"));
}

TEST(RepairOcrText, WhitespaceCollapsed) {
  EXPECT_EQ(repair_ocr_text("  13-08-2025 \t  18:45:09 \r\n"), "13-08-2025 18:45:09");
  EXPECT_EQ(repair_ocr_text(""), "");
  EXPECT_EQ(repair_ocr_text(" \t "), "");
}

TEST(RepairOcrText, DigitRunsOfOtherLengthsAreNotGuessed) {
  // 9 and 11 characters: left alone, then rejected by the parser.
  EXPECT_EQ(repair_ocr_text("131082025 18:45:09"), "131082025 18:45:09");
  EXPECT_EQ(repair_ocr_text("13108120250 18:45:09"), "13108120250 18:45:09");
  EXPECT_EQ(parse_error(repair_ocr_text("131082025 18:45:09")), ErrorCode::MalformedTimestamp);
  // Two-digit years are not pivoted.
  EXPECT_EQ(parse_error(repair_ocr_text("13-08-25 18:45:09")), ErrorCode::MalformedTimestamp);
}

TEST(RepairOcrText, ConfigurableMisreads) {
  MisreadTable table;
  table.time_separator = ".;";
  EXPECT_EQ(repair_ocr_text("13-08-2025 18;45;09", table), "13-08-2025 18:45:09");
  EXPECT_EQ(repair_ocr_text("13-08-2025 18;45;09"), "13-08-2025 18;45;09");
  table.date_separator = "";
  EXPECT_EQ(repair_ocr_text("1310812025 18:45:09", table), "1310812025 18:45:09");
}

TEST(ParseTimestamp, FieldMapping) {
  const auto t = parse_timestamp("13-08-2025 18:45:09");
  EXPECT_EQ(t, (FrameTimestamp{13, 8, 2025, 18, 45, 9, "IST"}));
}

TEST(ParseTimestamp, CalendarValidity) {
  EXPECT_EQ(parse_error("32-01-2025 10:00:00"), ErrorCode::InvalidDate);
  EXPECT_EQ(parse_error("01-13-2025 10:00:00"), ErrorCode::InvalidDate);
  EXPECT_EQ(parse_error("29-02-2023 10:00:00"), ErrorCode::InvalidDate);
  EXPECT_NO_THROW(parse_timestamp("29-02-2024 10:00:00"));
  EXPECT_EQ(parse_error("29-02-1900 10:00:00"), ErrorCode::InvalidDate);
  EXPECT_NO_THROW(parse_timestamp("29-02-2000 10:00:00"));
  EXPECT_EQ(parse_error("01-01-2025 24:00:00"), ErrorCode::InvalidDate);
  EXPECT_EQ(parse_error("01-01-2025 23:60:00"), ErrorCode::InvalidDate);
  EXPECT_EQ(parse_error("01-01-2025 23:59:60"), ErrorCode::InvalidDate);
  EXPECT_EQ(parse_error("99-99-9999 00:00:00"), ErrorCode::InvalidDate);
  EXPECT_EQ(parse_error("00-01-2025 00:00:00"), ErrorCode::InvalidDate);
  EXPECT_EQ(parse_error("01-01-0000 00:00:00"), ErrorCode::InvalidDate);
}

TEST(ParseTimestamp, PatternMismatch) {
  for (const char* s : {"", "13-08-2025", "13-08-2025T18:45:09", "13/08/2025 18:45:09", "13-08-2025 18.45.09",
                        "13-08-2025  18:45:09", "1a-08-2025 18:45:09", "13-08-2025 18:45:09 "}) {
    EXPECT_EQ(parse_error(s), ErrorCode::MalformedTimestamp) << s;
  }
}

TEST(RenderTimestamp, ZeroPadded) {
  EXPECT_EQ(render(FrameTimestamp{1, 2, 2025, 3, 4, 5}), "01-02-2025 03:04:05");
}

TEST(TimestampProperties, RoundTripOnRandomValidTimestamps) {
  rwtest::TimestampGen gen(11);
  for (int i = 0; i < 10000; ++i) {
    const FrameTimestamp t = gen.timestamp();
    ASSERT_TRUE(is_valid(t));
    ASSERT_EQ(parse_timestamp(render(t)), t) << render(t);
  }
}

TEST(TimestampProperties, RepairIsIdempotent) {
  rwtest::TimestampGen gen(12);
  for (int i = 0; i < 10000; ++i) {
    const std::string x = i % 2 ? gen.noise() : gen.corrupt(render(gen.timestamp())).text;
    const std::string once = repair_ocr_text(x);
    ASSERT_EQ(repair_ocr_text(once), once) << "input: '" << x << "'";
  }
}

TEST(TimestampProperties, SingleMisreadIsAlwaysRecovered) {
  rwtest::TimestampGen gen(13);
  for (int i = 0; i < 10000; ++i) {
    const std::string canonical = render(gen.timestamp());
    const auto corrupted = gen.corrupt(canonical);
    ASSERT_EQ(parse_timestamp(repair_ocr_text(corrupted.text)), parse_timestamp(canonical))
        << corrupted.text << " from " << canonical;
  }
}
