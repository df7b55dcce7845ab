#include "itoo/core/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "itoo/core/errors.hpp"

namespace itoo {

namespace {

int read_int(std::string_view s, std::size_t pos, std::size_t len) {
    int v = 0;
    const char* first = s.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, v);
    if (ec != std::errc{} || ptr != first + len) {
        throw ContractError("invalid ISO-8601 timestamp '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

Timestamp parse_iso8601(std::string_view s) {
    if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
    if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
        s[13] != ':' || s[16] != ':') {
        throw ContractError("invalid ISO-8601 timestamp '" + std::string(s) + "'");
    }
    using namespace std::chrono;
    const year_month_day ymd{year{read_int(s, 0, 4)}, month{static_cast<unsigned>(read_int(s, 5, 2))},
                             day{static_cast<unsigned>(read_int(s, 8, 2))}};
    const int hh = read_int(s, 11, 2);
    const int mm = read_int(s, 14, 2);
    const int ss = read_int(s, 17, 2);
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
        throw ContractError("out-of-range ISO-8601 timestamp '" + std::string(s) + "'");
    }
    return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_iso8601(Timestamp t) {
    using namespace std::chrono;
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{t - day_point};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(hms.hours().count()), static_cast<long long>(hms.minutes().count()),
                  static_cast<long long>(hms.seconds().count()));
    return buf;
}

std::int64_t whole_days_between(Timestamp then, Timestamp now) {
    using namespace std::chrono;
    return floor<days>(now - then).count();
}

}  // namespace itoo
