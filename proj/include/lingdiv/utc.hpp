#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "lingdiv/common.hpp"

namespace lingdiv::utc {

// Civil <-> epoch-day conversions (proleptic Gregorian), valid across the
// whole int range we care about.
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u + static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

inline bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int y, int m) {
    static const int lens[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lens[m - 1];
}

// Strict ISO-8601 instant: YYYY-MM-DDTHH:MM:SS with optional fractional
// seconds (truncated) and a Z or +/-HH:MM offset. Returns epoch seconds UTC.
inline std::int64_t parse_instant(std::string_view s) {
    auto fail = [&](const std::string& why) -> std::int64_t {
        throw data_error("timestamp '" + std::string(s) + "': " + why);
    };
    auto digits = [&](std::size_t pos, int n) -> int {
        int v = 0;
        for (int i = 0; i < n; ++i) {
            if (pos + i >= s.size() || s[pos + i] < '0' || s[pos + i] > '9')
                fail("expected digit at position " + std::to_string(pos + i));
            v = v * 10 + (s[pos + i] - '0');
        }
        return v;
    };
    if (s.size() < 20) fail("too short");
    int y = digits(0, 4);
    if (s[4] != '-') fail("expected '-'");
    int mo = digits(5, 2);
    if (s[7] != '-') fail("expected '-'");
    int d = digits(8, 2);
    if (s[10] != 'T') fail("expected 'T'");
    int h = digits(11, 2);
    if (s[13] != ':') fail("expected ':'");
    int mi = digits(14, 2);
    if (s[16] != ':') fail("expected ':'");
    int se = digits(17, 2);
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t fstart = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == fstart) fail("empty fractional seconds");
    }
    int offset_min = 0;
    if (pos >= s.size()) fail("missing timezone designator");
    if (s[pos] == 'Z') {
        if (pos + 1 != s.size()) fail("trailing characters");
    } else if (s[pos] == '+' || s[pos] == '-') {
        int sign = s[pos] == '+' ? 1 : -1;
        int oh = digits(pos + 1, 2);
        if (pos + 3 >= s.size() || s[pos + 3] != ':') fail("expected ':' in offset");
        int om = digits(pos + 4, 2);
        if (pos + 6 != s.size()) fail("trailing characters");
        offset_min = sign * (oh * 60 + om);
    } else {
        fail("expected 'Z' or offset");
    }
    if (mo < 1 || mo > 12) fail("month out of range");
    if (d < 1 || d > days_in_month(y, mo)) fail("day out of range");
    if (h > 23 || mi > 59 || se > 59) fail("time out of range");
    std::int64_t t = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
    return t - static_cast<std::int64_t>(offset_min) * 60;
}

inline std::string format_instant(std::int64_t epoch_s) {
    std::int64_t days = epoch_s / 86400;
    std::int64_t sod = epoch_s % 86400;
    if (sod < 0) {
        sod += 86400;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(sod / 3600), static_cast<int>((sod % 3600) / 60),
                  static_cast<int>(sod % 60));
    return buf;
}

// Calendar month key "YYYY-MM" of a UTC instant.
inline std::string month_key(std::int64_t epoch_s) {
    std::int64_t days = epoch_s / 86400;
    if (epoch_s % 86400 < 0) days -= 1;
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", y, m);
    return buf;
}

inline int year_of(std::int64_t epoch_s) {
    std::int64_t days = epoch_s / 86400;
    if (epoch_s % 86400 < 0) days -= 1;
    int y, m, d;
    civil_from_days(days, y, m, d);
    return y;
}

// "YYYY-MM" -> [start, end) epoch seconds of that calendar month.
inline std::pair<std::int64_t, std::int64_t> month_bounds(std::string_view ym) {
    if (ym.size() != 7 || ym[4] != '-')
        throw config_error("month '" + std::string(ym) + "': expected YYYY-MM");
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u})
        if (ym[i] < '0' || ym[i] > '9')
            throw config_error("month '" + std::string(ym) + "': expected YYYY-MM");
    int y = (ym[0] - '0') * 1000 + (ym[1] - '0') * 100 + (ym[2] - '0') * 10 + (ym[3] - '0');
    int m = (ym[5] - '0') * 10 + (ym[6] - '0');
    if (m < 1 || m > 12)
        throw config_error("month '" + std::string(ym) + "': month out of range");
    std::int64_t start = days_from_civil(y, m, 1) * 86400;
    int ny = m == 12 ? y + 1 : y;
    int nm = m == 12 ? 1 : m + 1;
    std::int64_t end = days_from_civil(ny, nm, 1) * 86400;
    return {start, end};
}

} // namespace lingdiv::utc
