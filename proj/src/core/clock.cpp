#include "vra/core/clock.hpp"

#include "vra/core/errors.hpp"

#include <fmt/format.h>

#include <charconv>

namespace vra {

namespace {

struct CivilTime {
    int year;
    unsigned month, day;
    long long hour, minute, second, millis;
};

CivilTime split(Timestamp t)
{
    using namespace std::chrono;
    auto const day_point = floor<days>(t);
    year_month_day const ymd{day_point};
    auto const ms = (t - day_point).count();
    return CivilTime{
        int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
        ms / 3'600'000, (ms / 60'000) % 60, (ms / 1000) % 60, ms % 1000,
    };
}

template <typename T>
T read_number(std::string_view text, std::size_t pos, std::size_t len)
{
    T value{};
    if (pos + len > text.size())
        throw Error(fmt::format("malformed timestamp '{}'", text));
    auto const* first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc{} || ptr != first + len)
        throw Error(fmt::format("malformed timestamp '{}'", text));
    return value;
}

}  // namespace

Timestamp SystemClock::now() const
{
    return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

Timestamp SteppingClock::now() const
{
    return Timestamp{std::chrono::milliseconds{next_.fetch_add(step_)}};
}

std::string format_iso8601(Timestamp t)
{
    auto const c = split(t);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", c.year, c.month, c.day, c.hour,
                       c.minute, c.second, c.millis);
}

Timestamp parse_iso8601(std::string_view text)
{
    // YYYY-MM-DDTHH:MM:SS.mmmZ, or without the milliseconds.
    bool const with_ms = text.size() == 24;
    if ((text.size() != 24 && text.size() != 20) || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || (with_ms && text[19] != '.') || text.back() != 'Z')
        throw Error(fmt::format("malformed timestamp '{}'", text));

    using namespace std::chrono;
    auto const y = read_number<int>(text, 0, 4);
    auto const mo = read_number<unsigned>(text, 5, 2);
    auto const d = read_number<unsigned>(text, 8, 2);
    year_month_day const ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok())
        throw Error(fmt::format("malformed timestamp '{}'", text));

    auto const h = read_number<int>(text, 11, 2);
    auto const mi = read_number<int>(text, 14, 2);
    auto const s = read_number<int>(text, 17, 2);
    auto const ms = with_ms ? read_number<int>(text, 20, 3) : 0;
    if (h > 23 || mi > 59 || s > 59)
        throw Error(fmt::format("malformed timestamp '{}'", text));

    return time_point_cast<milliseconds>(sys_days{ymd}) + hours{h} + minutes{mi} + seconds{s} +
           milliseconds{ms};
}

std::string format_prompt_time(Timestamp t)
{
    auto const c = split(t);
    return fmt::format("{:04}-{:02}-{:02} {:02}:{:02}:{:02} UTC", c.year, c.month, c.day, c.hour, c.minute,
                       c.second);
}

double seconds_between(Timestamp from, Timestamp to)
{
    return std::chrono::duration<double>(to - from).count();
}

}  // namespace vra
