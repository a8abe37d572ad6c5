#include "shaftpower/timeutil.hpp"

#include <charconv>
#include <chrono>

#include <fmt/format.h>

#include "shaftpower/errors.hpp"

namespace shaftpower {
namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw DataError(fmt::format("malformed timestamp '{}'", text));
  }
  return value;
}

UtcSeconds to_seconds(int y, int mo, int d, int h, int mi, int s, std::string_view text) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    throw DataError(fmt::format("invalid calendar time '{}'", text));
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<UtcSeconds>(days) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

}  // namespace

UtcSeconds parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DataError(fmt::format("malformed date '{}'", text));
  }
  return to_seconds(parse_field(text, 0, 4), parse_field(text, 5, 2), parse_field(text, 8, 2), 0, 0,
                    0, text);
}

UtcSeconds parse_iso8601(std::string_view text) {
  if (text.size() == 10) return parse_date(text);
  std::string_view body = text;
  if (!body.empty() && body.back() == 'Z') body.remove_suffix(1);
  if (body.size() != 19 || body[4] != '-' || body[7] != '-' || (body[10] != 'T' && body[10] != ' ') ||
      body[13] != ':' || body[16] != ':') {
    throw DataError(fmt::format("malformed timestamp '{}'", text));
  }
  return to_seconds(parse_field(body, 0, 4), parse_field(body, 5, 2), parse_field(body, 8, 2),
                    parse_field(body, 11, 2), parse_field(body, 14, 2), parse_field(body, 17, 2),
                    text);
}

std::string format_iso8601(UtcSeconds t) {
  using namespace std::chrono;
  const auto day_no = day_index(t);
  const auto secs = t - day_no * kSecondsPerDay;
  const year_month_day ymd{sys_days{days{day_no}}};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     secs / 3600, (secs / 60) % 60, secs % 60);
}

std::string format_date(UtcSeconds t) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day_index(t)}}};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

}  // namespace shaftpower
