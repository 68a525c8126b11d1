#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "mobsim/error.hpp"

// Civil-time helpers. All timestamps in the toolkit are UTC seconds since
// the Unix epoch; files carry them as ISO-8601 (YYYY-MM-DDTHH:MM:SSZ).

namespace mobsim {

constexpr std::int64_t kSecondsPerDay = 86400;

// Valid timestamp window (1970..2100).
constexpr std::int64_t kMinTimestamp = 0;
constexpr std::int64_t kMaxTimestamp = 4102444800LL;

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// civil-days algorithm).
constexpr std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDateTime {
    int year;
    int month;
    int day;
    int hour;
    int minute;
    int second;
};

constexpr CivilDateTime civil_from_timestamp(std::int64_t t) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t sod = t % kSecondsPerDay;
    if (sod < 0) {
        sod += kSecondsPerDay;
        --days;
    }
    std::int64_t z = days + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d),
            static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60),
            static_cast<int>(sod % 60)};
}

constexpr std::int64_t make_utc(int y, int mo, int d, int h, int mi, int s) {
    return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

inline bool timestamp_in_range(std::int64_t t) {
    return t >= kMinTimestamp && t <= kMaxTimestamp;
}

inline std::string to_iso8601(std::int64_t t) {
    const CivilDateTime c = civil_from_timestamp(t);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year, c.month, c.day,
                  c.hour, c.minute, c.second);
    return buf;
}

// Accepts "YYYY-MM-DDTHH:MM:SS" with optional trailing 'Z'; a space is
// tolerated in place of 'T'.
inline std::int64_t parse_iso8601(const std::string& s) {
    int y, mo, d, h, mi, sec;
    char sep;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec) != 7 ||
        (sep != 'T' && sep != ' ')) {
        throw ParseError("bad ISO-8601 timestamp: '" + s + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        sec < 0 || sec > 60) {
        throw ParseError("ISO-8601 field out of range: '" + s + "'");
    }
    return make_utc(y, mo, d, h, mi, sec);
}

}  // namespace mobsim
