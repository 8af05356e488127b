#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "grasp/error.hpp"

namespace grasp {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SSZ" and "YYYY-MM-DDTHH:MM:SS".
inline Timestamp parse_timestamp(std::string_view text) {
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
    const std::string buf(text);
    char tail = 0;
    int fields = 0;
    if (buf.size() == 10) {
        fields = std::sscanf(buf.c_str(), "%4d-%2u-%2u%c", &y, &mo, &d, &tail);
        if (fields != 3) fields = -1;
    } else if (buf.size() == 19 || (buf.size() == 20 && buf.back() == 'Z')) {
        fields = std::sscanf(buf.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u", &y, &mo, &d, &h, &mi, &s);
        if (fields != 6) fields = -1;
    } else {
        fields = -1;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
    if (fields < 0 || !ymd.ok() || h > 23 || mi > 59 || s > 59)
        throw Error(ErrorCode::InvalidArgument, "not an ISO-8601 UTC date or date-time: '" + buf + "'", buf);
    return Timestamp{Date{ymd}} + std::chrono::hours{h} + std::chrono::minutes{mi} + std::chrono::seconds{s};
}

inline Date parse_date(std::string_view text) {
    return std::chrono::floor<std::chrono::days>(parse_timestamp(text));
}

inline std::string format_timestamp(Timestamp ts) {
    const Date day = std::chrono::floor<std::chrono::days>(ts);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::hh_mm_ss hms{ts - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

inline std::string format_date(Date day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/// Calendar-day window [center - before, center + after], both ends
/// inclusive. A timestamp matches on its UTC calendar day.
struct DateWindow {
    Date center{};
    int before = 0;
    int after = 0;

    static DateWindow symmetric(Date center, int days) { return {center, days, days}; }

    Date first() const noexcept { return center - std::chrono::days{before}; }
    Date last() const noexcept { return center + std::chrono::days{after}; }

    bool contains(Timestamp ts) const noexcept {
        const Date day = std::chrono::floor<std::chrono::days>(ts);
        return day >= first() && day <= last();
    }
};

inline void validate(const DateWindow& w) {
    if (w.before < 0 || w.after < 0)
        throw Error(ErrorCode::InvalidArgument, "date window offsets must be non-negative");
}

} // namespace grasp
