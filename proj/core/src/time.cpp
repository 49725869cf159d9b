#include <chainscope/error.hpp>
#include <chainscope/time.hpp>

#include <charconv>
#include <cstdio>

namespace chainscope {
    using namespace std::chrono;

    namespace {
        bool read_int(std::string_view text, size_t pos, size_t len, int &out)
        {
            if (pos + len > text.size())
                return false;
            const auto *first = text.data() + pos;
            const auto *last = first + len;
            const auto res = std::from_chars(first, last, out);
            return res.ec == std::errc {} && res.ptr == last;
        }

        int64_t floor_div(int64_t a, int64_t b) noexcept
        {
            int64_t q = a / b;
            if ((a % b != 0) && ((a < 0) != (b < 0)))
                --q;
            return q;
        }
    }

    std::int64_t epoch_seconds(timestamp t) noexcept
    {
        return t.time_since_epoch().count();
    }

    timestamp from_epoch_seconds(std::int64_t s) noexcept
    {
        return timestamp { seconds { s } };
    }

    bool try_parse_utc(std::string_view text, timestamp &out) noexcept
    {
        int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
        if (!read_int(text, 0, 4, y) || text.size() < 10 || text[4] != '-' || !read_int(text, 5, 2, mo) || text[7] != '-'
                || !read_int(text, 8, 2, d))
            return false;
        size_t pos = 10;
        if (pos < text.size()) {
            if (text[pos] != 'T' && text[pos] != ' ')
                return false;
            if (!read_int(text, pos + 1, 2, h) || text.size() < pos + 9 || text[pos + 3] != ':' || !read_int(text, pos + 4, 2, mi)
                    || text[pos + 6] != ':' || !read_int(text, pos + 7, 2, s))
                return false;
            pos += 9;
            if (pos < text.size() && text[pos] == '.') {
                ++pos;
                while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9')
                    ++pos;
            }
        }
        int offset_seconds = 0;
        if (pos < text.size()) {
            if (text[pos] == 'Z' && pos + 1 == text.size()) {
                ++pos;
            } else if ((text[pos] == '+' || text[pos] == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
                int oh = 0, om = 0;
                if (!read_int(text, pos + 1, 2, oh) || !read_int(text, pos + 4, 2, om))
                    return false;
                offset_seconds = (oh * 3600 + om * 60) * (text[pos] == '-' ? -1 : 1);
                pos = text.size();
            } else {
                return false;
            }
        }
        const year_month_day ymd { year { y }, month { static_cast<unsigned>(mo) }, day { static_cast<unsigned>(d) } };
        if (!ymd.ok() || h > 23 || mi > 59 || s > 60)
            return false;
        out = sys_days { ymd } + hours { h } + minutes { mi } + seconds { s } - seconds { offset_seconds };
        return true;
    }

    timestamp parse_utc(std::string_view text)
    {
        timestamp t;
        if (!try_parse_utc(text, t))
            throw error("invalid UTC timestamp: '" + std::string { text } + "'");
        return t;
    }

    std::string format_utc(timestamp t)
    {
        const auto day_point = floor<days>(t);
        const year_month_day ymd { day_point };
        const hh_mm_ss hms { t - day_point };
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
            static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<long>(hms.hours().count()),
            static_cast<long>(hms.minutes().count()), static_cast<long>(hms.seconds().count()));
        return buf;
    }

    std::chrono::seconds parse_duration(std::string_view text)
    {
        if (text.empty())
            throw config_error("empty duration");
        int64_t total = 0;
        size_t pos = 0;
        while (pos < text.size()) {
            int64_t value = 0;
            const auto res = std::from_chars(text.data() + pos, text.data() + text.size(), value);
            if (res.ec != std::errc {} || res.ptr == text.data() + text.size())
                throw config_error("invalid duration: '" + std::string { text } + "'");
            pos = static_cast<size_t>(res.ptr - text.data());
            int64_t unit = 0;
            switch (text[pos]) {
                case 's': unit = 1; break;
                case 'm': unit = 60; break;
                case 'h': unit = 3600; break;
                case 'd': unit = 86400; break;
                default: throw config_error("invalid duration unit in '" + std::string { text } + "'");
            }
            ++pos;
            total += value * unit;
        }
        if (total <= 0)
            throw config_error("duration must be positive: '" + std::string { text } + "'");
        return seconds { total };
    }

    std::string format_duration(std::chrono::seconds d)
    {
        const auto s = d.count();
        if (s % 86400 == 0)
            return std::to_string(s / 86400) + "d";
        if (s % 3600 == 0)
            return std::to_string(s / 3600) + "h";
        if (s % 60 == 0)
            return std::to_string(s / 60) + "m";
        return std::to_string(s) + "s";
    }

    timestamp window_start(timestamp t, std::chrono::seconds width) noexcept
    {
        const auto w = width.count();
        return from_epoch_seconds(floor_div(epoch_seconds(t), w) * w);
    }
}
