#include "evcharge/timestamp.hpp"

#include <fmt/core.h>


namespace evcharge {

using namespace std::chrono;

namespace {

std::optional<int> parse_digits(std::string_view text) {
    int value = 0;
    for (char c : text) {
        if (c < '0' || c > '9') {
            return std::nullopt;
        }
        value = value * 10 + (c - '0');
    }
    return value;
}

std::optional<Timestamp> assemble(std::optional<int> y, std::optional<int> mo, std::optional<int> d,
                                  std::optional<int> h, std::optional<int> mi,
                                  std::optional<int> s) {
    if (!y || !mo || !d || !h || !mi || !s) {
        return std::nullopt;
    }
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok() || *h > 23 || *mi > 59 || *s > 59) {
        return std::nullopt;
    }
    return Timestamp{sys_days{ymd}} + hours{*h} + minutes{*mi} + seconds{*s};
}

} // namespace

std::optional<Timestamp> parse_compact_timestamp(std::string_view text) {
    if (text.size() != 14) {
        return std::nullopt;
    }
    return assemble(parse_digits(text.substr(0, 4)), parse_digits(text.substr(4, 2)),
                    parse_digits(text.substr(6, 2)), parse_digits(text.substr(8, 2)),
                    parse_digits(text.substr(10, 2)), parse_digits(text.substr(12, 2)));
}

std::optional<Timestamp> parse_iso8601(std::string_view text) {
    if (text.size() != 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':' || text[16] != ':') {
        return std::nullopt;
    }
    return assemble(parse_digits(text.substr(0, 4)), parse_digits(text.substr(5, 2)),
                    parse_digits(text.substr(8, 2)), parse_digits(text.substr(11, 2)),
                    parse_digits(text.substr(14, 2)), parse_digits(text.substr(17, 2)));
}

namespace {

struct Civil {
    int year;
    unsigned month, day;
    long hour, minute, second;
};

Civil split(Timestamp t) {
    const auto dp = floor<days>(t);
    const year_month_day ymd{dp};
    const hh_mm_ss hms{t - dp};
    return {int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()), hms.hours().count(),
            hms.minutes().count(), static_cast<long>(hms.seconds().count())};
}

} // namespace

std::string format_iso8601(Timestamp t) {
    const Civil c = split(t);
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", c.year, c.month, c.day, c.hour,
                       c.minute, c.second);
}

std::string format_compact(Timestamp t) {
    const Civil c = split(t);
    return fmt::format("{:04d}{:02d}{:02d}{:02d}{:02d}{:02d}", c.year, c.month, c.day, c.hour,
                       c.minute, c.second);
}

int hour_of_day(Timestamp t) {
    const auto dp = floor<days>(t);
    return static_cast<int>(duration_cast<hours>(t - dp).count());
}

long day_index(Timestamp t) { return floor<days>(t).time_since_epoch().count(); }

Timestamp make_timestamp(int year_, unsigned month_, unsigned day_, int hour, int minute,
                         int second) {
    return Timestamp{sys_days{year{year_} / month{month_} / day{day_}}} + hours{hour} +
           minutes{minute} + seconds{second};
}

} // namespace evcharge
