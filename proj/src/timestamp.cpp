#include "roadwatch/timestamp.hpp"

#include <chrono>
#include <cstdio>
#include <vector>

#include "roadwatch/error.hpp"

namespace roadwatch {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool contains(std::string_view set, char c) { return set.find(c) != std::string_view::npos; }

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// HH?MM?SS with an optional trailing fractional-seconds run. The fraction is
// dropped: truncation, never rounding.
bool repair_time_token(std::string_view tok, const MisreadTable& table, std::string& out) {
  if (tok.size() < 8) return false;
  auto sep = [&](char c) { return c == ':' || contains(table.time_separator, c); };
  if (!is_digit(tok[0]) || !is_digit(tok[1]) || !sep(tok[2]) || !is_digit(tok[3]) ||
      !is_digit(tok[4]) || !sep(tok[5]) || !is_digit(tok[6]) || !is_digit(tok[7])) {
    return false;
  }
  if (tok.size() > 8) {
    const char frac_sep = tok[8];
    if (frac_sep != '.' && frac_sep != ',' && frac_sep != ':') return false;
    if (tok.size() == 9) return false;
    for (std::size_t i = 9; i < tok.size(); ++i) {
      if (!is_digit(tok[i])) return false;
    }
  }
  out.assign(tok.substr(0, 2));
  out += ':';
  out.append(tok.substr(3, 2));
  out += ':';
  out.append(tok.substr(6, 2));
  return true;
}

// Exactly 10 characters, digits everywhere except 1-based positions 3 and 6,
// which must be a real or misread separator. Other lengths are left alone.
bool repair_date_token(std::string_view tok, const MisreadTable& table, std::string& out) {
  if (tok.size() != 10) return false;
  auto sep = [&](char c) { return c == '-' || c == '/' || contains(table.date_separator, c); };
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (i == 2 || i == 5) {
      if (!sep(tok[i])) return false;
    } else if (!is_digit(tok[i])) {
      return false;
    }
  }
  out.assign(tok);
  out[2] = '-';
  out[5] = '-';
  return true;
}

int two(std::string_view s, std::size_t pos) { return (s[pos] - '0') * 10 + (s[pos + 1] - '0'); }

}  // namespace

std::string repair_ocr_text(std::string_view raw, const MisreadTable& table) {
  std::string result;
  std::string fixed;
  for (std::string_view tok : split_ws(raw)) {
    if (!result.empty()) result += ' ';
    if (repair_time_token(tok, table, fixed) || repair_date_token(tok, table, fixed)) {
      result += fixed;
    } else {
      result.append(tok);
    }
  }
  return result;
}

bool is_valid(const FrameTimestamp& t) {
  using namespace std::chrono;
  if (t.year < 1 || t.year > 9999) return false;
  if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > 31) return false;
  if (t.hour < 0 || t.hour > 23 || t.minute < 0 || t.minute > 59 || t.second < 0 ||
      t.second > 59) {
    return false;
  }
  return year_month_day{year{t.year}, month{unsigned(t.month)}, day{unsigned(t.day)}}.ok();
}

FrameTimestamp parse_timestamp(std::string_view s) {
  static constexpr std::string_view kPattern = "DD-MM-YYYY HH:MM:SS";
  bool shape = s.size() == kPattern.size();
  for (std::size_t i = 0; shape && i < s.size(); ++i) {
    const char p = kPattern[i];
    if (p == '-' || p == ' ' || p == ':') {
      shape = s[i] == p;
    } else {
      shape = is_digit(s[i]);
    }
  }
  if (!shape) {
    throw Error(ErrorCode::MalformedTimestamp,
                "timestamp does not match DD-MM-YYYY HH:MM:SS: '" + std::string(s) + "'");
  }
  FrameTimestamp t;
  t.day = two(s, 0);
  t.month = two(s, 3);
  t.year = two(s, 6) * 100 + two(s, 8);
  t.hour = two(s, 11);
  t.minute = two(s, 14);
  t.second = two(s, 17);
  if (!is_valid(t)) {
    throw Error(ErrorCode::InvalidDate, "no such calendar instant: '" + std::string(s) + "'");
  }
  return t;
}

std::string render(const FrameTimestamp& t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02d-%02d-%04d %02d:%02d:%02d", t.day, t.month, t.year, t.hour,
                t.minute, t.second);
  return buf;
}

}  // namespace roadwatch
