#pragma once

#include <random>
#include <string>

#include "roadwatch/timestamp.hpp"

namespace rwtest {

// Hand-rolled generators for the timestamp properties. Calendar rules are
// written out here rather than borrowed from <chrono>.
class TimestampGen {
 public:
  explicit TimestampGen(std::uint64_t seed) : rng_(seed) {}

  static int days_in_month(int y, int m) {
    static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return m == 2 && leap ? 29 : kDays[m - 1];
  }

  roadwatch::FrameTimestamp timestamp() {
    roadwatch::FrameTimestamp t;
    t.year = pick(1900, 2100);
    t.month = pick(1, 12);
    t.day = pick(1, days_in_month(t.year, t.month));
    t.hour = pick(0, 23);
    t.minute = pick(0, 59);
    t.second = pick(0, 59);
    return t;
  }

  struct Corrupted {
    std::string text;
    int kind;  // 0 ':'->'.', 1 '-'->'1', 2 '/'->'1' on the slash form
  };

  // One substitution from the misread table applied to a canonical string.
  Corrupted corrupt(std::string canonical) {
    const int kind = pick(0, 2);
    const int which = pick(0, 1);
    if (kind == 0) {
      canonical[which ? 16 : 13] = '.';
    } else if (kind == 1) {
      canonical[which ? 5 : 2] = '1';
    } else {
      canonical[2] = canonical[5] = '/';
      canonical[which ? 5 : 2] = '1';
    }
    return {canonical, kind};
  }

  // Arbitrary text biased towards timestamp-like characters.
  std::string noise() {
    static const std::string kAlphabet = "0123456789-/:.,1 \t xX";
    std::string s(pick(0, 32), ' ');
    for (auto& c : s) c = kAlphabet[pick(0, int(kAlphabet.size()) - 1)];
    return s;
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace rwtest
