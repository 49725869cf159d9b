#include <doctest.h>

#include <chainscope/error.hpp>
#include <chainscope/time.hpp>

using namespace chainscope;
using namespace std::chrono_literals;

TEST_CASE("UTC timestamps parse in the node formats")
{
    CHECK(epoch_seconds(parse_utc("2019-10-01T00:00:00Z")) == 1569888000);
    CHECK(epoch_seconds(parse_utc("2019-10-01T00:00:00.500")) == 1569888000);
    CHECK(epoch_seconds(parse_utc("2019-10-01")) == 1569888000);
    CHECK(epoch_seconds(parse_utc("2019-10-01T02:00:00+02:00")) == 1569888000);
    CHECK(epoch_seconds(parse_utc("2019-09-30T22:00:00-02:00")) == 1569888000);
    timestamp t;
    CHECK_FALSE(try_parse_utc("2019-13-01", t));
    CHECK_FALSE(try_parse_utc("2019-10-01T25:00:00Z", t));
    CHECK_FALSE(try_parse_utc("yesterday", t));
    CHECK_FALSE(try_parse_utc("2019-10-01T00:00:00Zjunk", t));
    CHECK_THROWS_AS(parse_utc(""), error);
}

TEST_CASE("format_utc is the inverse of parse_utc")
{
    for (std::int64_t s : { 0LL, 946684800LL, 1569888000LL, 1588291199LL, 4102444800LL }) {
        const auto t = from_epoch_seconds(s);
        CHECK(parse_utc(format_utc(t)) == t);
    }
    CHECK(format_utc(from_epoch_seconds(1569888000)) == "2019-10-01T00:00:00Z");
}

TEST_CASE("the observation window spans 213 days")
{
    const auto span = parse_utc("2020-05-01") - parse_utc("2019-10-01");
    CHECK(span.count() == 18403200);
}

TEST_CASE("durations")
{
    CHECK(parse_duration("6h") == 6h);
    CHECK(parse_duration("30m") == 30min);
    CHECK(parse_duration("1d") == 24h);
    CHECK(parse_duration("2h30m") == 150min);
    CHECK(parse_duration("45s") == 45s);
    CHECK_THROWS_AS(parse_duration(""), config_error);
    CHECK_THROWS_AS(parse_duration("6"), config_error);
    CHECK_THROWS_AS(parse_duration("6w"), config_error);
    CHECK_THROWS_AS(parse_duration("0h"), config_error);
    CHECK(format_duration(6h) == "6h");
    CHECK(format_duration(24h) == "1d");
    CHECK(format_duration(90s) == "90s");
    CHECK(format_duration(90min) == "90m");
}

TEST_CASE("windows align to the epoch grid")
{
    const auto t = parse_utc("2019-10-01T07:30:00Z");
    CHECK(window_start(t, 6h) == parse_utc("2019-10-01T06:00:00Z"));
    CHECK(window_start(parse_utc("2019-10-01T06:00:00Z"), 6h) == parse_utc("2019-10-01T06:00:00Z"));
    // before the epoch the floor still goes down
    CHECK(epoch_seconds(window_start(from_epoch_seconds(-1), 6h)) == -21600);
}

TEST_CASE("ripple epoch offset")
{
    CHECK(from_epoch_seconds(ripple_epoch_offset) == parse_utc("2000-01-01T00:00:00Z"));
}
