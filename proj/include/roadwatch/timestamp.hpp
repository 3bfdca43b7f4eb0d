#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace roadwatch {

struct RawFrameText {
  std::int64_t frame_id = 0;
  std::string text;
};

/// Wall-clock timestamp burned into a dashcam frame, in the deployment's
/// local zone.
struct FrameTimestamp {
  int day = 1;
  int month = 1;
  int year = 1970;
  int hour = 0;
  int minute = 0;
  int second = 0;
  std::string zone = "IST";

  friend bool operator==(const FrameTimestamp&, const FrameTimestamp&) = default;
};

/// Characters the OCR stage is known to emit in place of a separator.
/// Entries are configuration; only the misreads actually observed on the
/// dashcam overlays belong here.
struct MisreadTable {
  /// Misreads of ':' inside the HH:MM:SS token.
  std::string time_separator = ".";
  /// Misreads of '-' or '/' at positions 3 and 6 of a 10-character date token.
  std::string date_separator = "1/";
};

/// Best-effort repair of OCR text into `DD-MM-YYYY HH:MM:SS`. Never fails;
/// text it cannot fix is returned in normalized-whitespace form and will be
/// rejected by parse_timestamp.
std::string repair_ocr_text(std::string_view raw, const MisreadTable& table = {});

/// Strict parse of `DD-MM-YYYY HH:MM:SS`.
/// Throws Error{MalformedTimestamp} on pattern mismatch and
/// Error{InvalidDate} when a field is out of range or the date does not exist.
FrameTimestamp parse_timestamp(std::string_view normalized);

/// Canonical `DD-MM-YYYY HH:MM:SS` rendering.
std::string render(const FrameTimestamp& t);

bool is_valid(const FrameTimestamp& t);

}  // namespace roadwatch
