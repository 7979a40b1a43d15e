#include "evhan/date.hpp"

#include <cctype>
#include <cstdio>

namespace evhan {
namespace {

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!digits(text, 0, 4, y) || !digits(text, 5, 2, m) || !digits(text, 8, 2, d)) return std::nullopt;
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::optional<Date> timestamp_date(std::string_view ts) {
  auto date = parse_date(ts.substr(0, 10));
  if (!date) return std::nullopt;
  if (ts.size() == 10) return date;
  // date-time separator, then HH:MM:SS
  if (ts[10] != 'T' && ts[10] != 't' && ts[10] != ' ') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!digits(ts, 11, 2, hh) || ts.size() < 19 || ts[13] != ':' || !digits(ts, 14, 2, mm) || ts[16] != ':' ||
      !digits(ts, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  std::size_t pos = 19;
  if (pos < ts.size() && ts[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < ts.size() && std::isdigit(static_cast<unsigned char>(ts[pos]))) ++pos;
    if (pos == start) return std::nullopt;
  }
  if (pos == ts.size()) return std::nullopt;  // offset is mandatory
  if (ts[pos] == 'Z' || ts[pos] == 'z') return pos + 1 == ts.size() ? date : std::nullopt;
  if (ts[pos] != '+' && ts[pos] != '-') return std::nullopt;
  int oh = 0, om = 0;
  if (ts.size() != pos + 6 || !digits(ts, pos + 1, 2, oh) || ts[pos + 3] != ':' || !digits(ts, pos + 4, 2, om)) {
    return std::nullopt;
  }
  if (oh > 23 || om > 59) return std::nullopt;
  return date;
}

}  // namespace evhan
