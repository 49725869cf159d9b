#include <doctest.h>

#include <chainscope/decimal.hpp>
#include <chainscope/error.hpp>

#include <random>

using chainscope::decimal;

TEST_CASE("decimal parses and prints shortest exact text")
{
    CHECK(decimal::parse("1.5").to_string() == "1.5");
    CHECK(decimal::parse("-0.001").to_string() == "-0.001");
    CHECK(decimal::parse("42").to_string() == "42");
    CHECK(decimal::parse("+7.000").to_string() == "7");
    CHECK(decimal::parse("1.2e3").to_string() == "1200");
    CHECK(decimal::parse("15E-1").to_string() == "1.5");
    CHECK(decimal::parse("0.000000000000000001").to_string() == "0.000000000000000001");
    // digits past the 18th fractional place are truncated
    CHECK(decimal::parse("0.0000000000000000019").to_string() == "0.000000000000000001");
    CHECK(decimal::parse("-0").to_string() == "0");
}

TEST_CASE("decimal rejects text that is not a number")
{
    decimal d;
    CHECK_FALSE(decimal::try_parse("", d));
    CHECK_FALSE(decimal::try_parse("abc", d));
    CHECK_FALSE(decimal::try_parse("1.2.3", d));
    CHECK_FALSE(decimal::try_parse("1e", d));
    CHECK_FALSE(decimal::try_parse("12 EOS", d));
    CHECK_THROWS_AS(decimal::parse("x1"), chainscope::decimal_error);
}

TEST_CASE("decimal arithmetic is exact")
{
    const auto a = decimal::parse("0.1");
    const auto b = decimal::parse("0.2");
    CHECK(a + b == decimal::parse("0.3"));
    CHECK(b - a == a);
    CHECK(a * b == decimal::parse("0.02"));
    CHECK(b / a == decimal { 2 });
    CHECK(-a == decimal::parse("-0.1"));
    CHECK(decimal::parse("-3.5").abs() == decimal::parse("3.5"));
    CHECK(decimal::parse("3").is_integer());
    CHECK_FALSE(decimal::parse("3.01").is_integer());
}

TEST_CASE("decimal ratio truncates toward zero")
{
    CHECK(decimal::ratio(decimal { 1 }, decimal { 3 }).to_string() == "0.333333333333333333");
    CHECK(decimal::ratio(decimal { -1 }, decimal { 3 }).to_string() == "-0.333333333333333333");
    CHECK(decimal::ratio(decimal { 2 }, decimal { 3 }).to_string() == "0.666666666666666666");
    CHECK_THROWS_AS(decimal::ratio(decimal { 1 }, decimal {}), chainscope::decimal_error);
}

TEST_CASE("to_fixed rounds half away from zero")
{
    CHECK(decimal::parse("34.3125").to_fixed(2) == "34.31");
    CHECK(decimal::parse("0.425").to_fixed(2) == "0.43");
    CHECK(decimal::parse("-0.425").to_fixed(2) == "-0.43");
    CHECK(decimal::parse("136").to_fixed(2) == "136.00");
    CHECK(decimal::parse("0.004").to_fixed(2) == "0.00");
    CHECK(decimal::parse("9.995").to_fixed(2) == "10.00");
    CHECK(decimal::parse("2.5").to_fixed(0) == "3");
}

TEST_CASE("decimal ordering matches the represented value")
{
    CHECK(decimal::parse("-1") < decimal {});
    CHECK(decimal::parse("0.5") < decimal::parse("0.51"));
    CHECK(decimal::parse("1e2") == decimal { 100 });
}

TEST_CASE("decimal overflow raises decimal_error")
{
    auto big = decimal::parse("1e50");
    CHECK_THROWS_AS(big * big, chainscope::decimal_error);
}

TEST_CASE("property: addition round-trips through text and subtraction")
{
    std::mt19937_64 rng { 7 };
    std::uniform_int_distribution<std::int64_t> pick { -1000000000000LL, 1000000000000LL };
    for (int i = 0; i < 500; ++i) {
        const auto a = decimal::ratio(decimal { pick(rng) }, decimal { 1000000 });
        const auto b = decimal::ratio(decimal { pick(rng) }, decimal { 10000 });
        CHECK(decimal::parse((a + b).to_string()) == a + b);
        CHECK(a + b - b == a);
        CHECK(a + b == b + a);
    }
}
