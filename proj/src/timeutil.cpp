#include "triage/timeutil.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <utility>

#include "tzif.hpp"

namespace triage {
namespace {

using namespace std::chrono;

// Parses exactly `width` ASCII digits.
std::optional<int> digits(std::string_view text, std::size_t pos, std::size_t width) {
  if (text.size() < pos + width) return std::nullopt;
  int v = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::optional<year_month_day> make_date(int y, int m, int d) {
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::optional<seconds> make_time(int h, int m, int s) {
  if (h > 23 || m > 59 || s > 59) return std::nullopt;
  return hours{h} + minutes{m} + seconds{s};
}

// "+HH:MM", "+HHMM", "+HH", "+H" (sign required).
std::optional<seconds> parse_signed_offset(std::string_view text) {
  if (text.empty() || (text[0] != '+' && text[0] != '-')) return std::nullopt;
  const int sign = text[0] == '-' ? -1 : 1;
  std::string_view body = text.substr(1);
  int h = 0, m = 0;
  if (body.size() == 1 || body.size() == 2) {
    auto v = digits(body, 0, body.size());
    if (!v) return std::nullopt;
    h = *v;
  } else if (body.size() == 4) {
    auto hh = digits(body, 0, 2), mm = digits(body, 2, 2);
    if (!hh || !mm) return std::nullopt;
    h = *hh;
    m = *mm;
  } else if (body.size() == 5 && body[2] == ':') {
    auto hh = digits(body, 0, 2), mm = digits(body, 3, 2);
    if (!hh || !mm) return std::nullopt;
    h = *hh;
    m = *mm;
  } else {
    return std::nullopt;
  }
  if (h > 14 || m > 59) return std::nullopt;
  return seconds{sign * (h * 3600 + m * 60)};
}

struct Abbreviation {
  std::string_view name;
  int minutes_east;
};

// Unambiguous abbreviations only; IST/CST-China style collisions are left to
// IANA names.
constexpr std::array<Abbreviation, 24> kAbbreviations{{
    {"EST", -300},  {"EDT", -240},  {"CST", -360},  {"CDT", -300},  {"MST", -420},
    {"MDT", -360},  {"PST", -480},  {"PDT", -420},  {"AKST", -540}, {"AKDT", -480},
    {"HST", -600},  {"WET", 0},     {"WEST", 60},   {"BST", 60},    {"CET", 60},
    {"CEST", 120},  {"EET", 120},   {"EEST", 180},  {"MSK", 180},   {"JST", 540},
    {"KST", 540},   {"AEST", 600},  {"AEDT", 660},  {"NZST", 720},
}};

}  // namespace

std::optional<Instant> parse_iso8601_utc(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS then Z or +00:00
  if (text.size() < 20 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != 't') ||
      text[13] != ':' || text[16] != ':')
    return std::nullopt;
  std::string_view suffix = text.substr(19);
  if (suffix != "Z" && suffix != "z" && suffix != "+00:00") return std::nullopt;
  auto y = digits(text, 0, 4), mo = digits(text, 5, 2), d = digits(text, 8, 2);
  auto h = digits(text, 11, 2), mi = digits(text, 14, 2), s = digits(text, 17, 2);
  if (!y || !mo || !d || !h || !mi || !s) return std::nullopt;
  auto date = make_date(*y, *mo, *d);
  auto tod = make_time(*h, *mi, *s);
  if (!date || !tod) return std::nullopt;
  return sys_days{*date} + *tod;
}

std::string format_iso8601_utc(Instant t) {
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

std::optional<year_month_day> parse_us_date(std::string_view text) {
  if (text.size() != 10 || text[2] != '/' || text[5] != '/') return std::nullopt;
  auto m = digits(text, 0, 2), d = digits(text, 3, 2), y = digits(text, 6, 4);
  if (!m || !d || !y) return std::nullopt;
  return make_date(*y, *m, *d);
}

std::string format_us_date(year_month_day date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02u/%02u/%04d", static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()), static_cast<int>(date.year()));
  return buf;
}

std::optional<seconds> parse_time_of_day(std::string_view text) {
  if (text.size() != 8 || text[2] != ':' || text[5] != ':') return std::nullopt;
  auto h = digits(text, 0, 2), m = digits(text, 3, 2), s = digits(text, 6, 2);
  if (!h || !m || !s) return std::nullopt;
  return make_time(*h, *m, *s);
}

std::string format_time_of_day(seconds time_of_day) {
  const hh_mm_ss tod{time_of_day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()));
  return buf;
}

std::optional<seconds> fixed_zone_offset(std::string_view zone) {
  if (zone == "UTC" || zone == "GMT" || zone == "Z" || zone == "UCT" || zone == "Etc/UTC" ||
      zone == "Etc/GMT")
    return seconds{0};
  if (auto off = parse_signed_offset(zone)) return off;
  for (std::string_view prefix : {std::string_view{"UTC"}, std::string_view{"GMT"}}) {
    if (zone.size() > prefix.size() && zone.substr(0, prefix.size()) == prefix)
      return parse_signed_offset(zone.substr(prefix.size()));
  }
  for (const auto& abbr : kAbbreviations)
    if (abbr.name == zone) return minutes{abbr.minutes_east};
  return std::nullopt;
}

std::optional<Instant> resolve_local_time(year_month_day date, seconds time_of_day, std::string_view zone) {
  if (!date.ok()) return std::nullopt;
  const Instant local_as_utc = sys_days{date} + time_of_day;
  if (auto off = fixed_zone_offset(zone)) return local_as_utc - *off;

  auto rules = detail::find_zone(std::string(zone));
  if (!rules) return std::nullopt;
  auto candidates = rules->local_to_utc(local_as_utc.time_since_epoch().count());
  if (candidates.size() != 1) return std::nullopt;
  return Instant{seconds{candidates.front()}};
}

}  // namespace triage
