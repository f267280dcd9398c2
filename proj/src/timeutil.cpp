#include "dstg/timeutil.hpp"

#include <cstdio>

#include "dstg/errors.hpp"

namespace dstg {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::int64_t parse_rfc3339(const std::string& s) {
    int y, mo, d, h, mi, sec;
    char sep, zone;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d%c", &y, &mo, &d, &sep, &h, &mi, &sec, &zone) != 8 ||
        (sep != 'T' && sep != 't' && sep != ' ') || (zone != 'Z' && zone != 'z'))
        throw ValidationError("timestamp '" + s + "' is not RFC 3339 UTC (expected YYYY-MM-DDThh:mm:ssZ)");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60)
        throw ValidationError("timestamp '" + s + "' has out-of-range fields");
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

std::string format_rfc3339(std::int64_t t) {
    const std::int64_t days = floor_div(t, 86400);
    int sod = static_cast<int>(t - days * 86400);
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d, sod / 3600, (sod / 60) % 60, sod % 60);
    return buf;
}

int day_of_week(std::int64_t t) {
    const std::int64_t days = floor_div(t, 86400);
    // 1970-01-01 was a Thursday; Monday = 0.
    return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

int seconds_of_day(std::int64_t t) {
    const std::int64_t days = floor_div(t, 86400);
    return static_cast<int>(t - days * 86400);
}

}  // namespace dstg
