#include <doctest.h>

#include <chainscope/error.hpp>
#include <chainscope/throughput.hpp>

#include <random>

using namespace chainscope;
using namespace std::chrono_literals;

namespace {
    const auto obs_start = parse_utc("2019-10-01T00:00:00Z");
    const auto obs_end = parse_utc("2020-05-01T00:00:00Z");

    // total / seconds rounded half up to hundredths, in integer arithmetic
    std::string oracle_2dp(std::uint64_t total, std::uint64_t seconds)
    {
        const auto hundredths = (total * 200 + seconds) / (2 * seconds);
        auto frac = std::to_string(hundredths % 100);
        if (frac.size() < 2)
            frac.insert(0, "0");
        return std::to_string(hundredths / 100) + "." + frac;
    }
}

TEST_CASE("the observation window spans 213 days")
{
    CHECK((obs_end - obs_start).count() == 213 * 86400);
    CHECK((obs_end - obs_start).count() == 18403200);
}

TEST_CASE("average tps of the three datasets")
{
    const std::uint64_t seconds = 18403200;
    for (const std::uint64_t total : { 631445236ULL, 7890133ULL, 271546797ULL }) {
        const auto tps = throughput::average_tps(total, obs_start, obs_end);
        CAPTURE(total);
        CHECK(tps.to_fixed(2) == oracle_2dp(total, seconds));
    }
    CHECK(throughput::average_tps(631445236, obs_start, obs_end).to_fixed(2) == "34.31");
    CHECK(throughput::average_tps(7890133, obs_start, obs_end).to_fixed(2) == "0.43");
    CHECK(throughput::average_tps(271546797, obs_start, obs_end).to_fixed(2) == "14.76");
}

TEST_CASE("average tps rejects empty windows")
{
    CHECK_THROWS_AS(throughput::average_tps(1, obs_start, obs_start), empty_window);
    CHECK_THROWS_AS(throughput::average_tps(1, obs_end, obs_start), empty_window);
}

TEST_CASE("max tps over six-hour windows")
{
    std::vector<throughput::window_count> series;
    for (int i = 0; i < 10; ++i)
        series.push_back({ obs_start + std::chrono::hours { 6 * i }, static_cast<std::uint64_t>(1000 * i) });
    series[4].count = 2937600;
    const auto p = throughput::max_tps(series);
    CHECK(p.tps.to_fixed(2) == "136.00");
    CHECK(p.tps == decimal { 136 });
    CHECK(p.window_start == series[4].start);
    CHECK(p.count == 2937600);
    CHECK_THROWS_AS(throughput::max_tps({}), empty_window);
}

TEST_CASE("max tps ties resolve to the earliest window")
{
    std::vector<throughput::window_count> series { { obs_start + 12h, 50 }, { obs_start, 50 }, { obs_start + 6h, 10 } };
    CHECK(throughput::max_tps(series).window_start == obs_start);
}

TEST_CASE("property: max tps equals the brute-force maximum")
{
    std::mt19937_64 rng { 3 };
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<throughput::window_count> series;
        const auto n = 1 + rng() % 40;
        std::uint64_t best = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto c = rng() % 1000000;
            best = std::max(best, c);
            series.push_back({ obs_start + std::chrono::hours { 6 * i }, c });
        }
        const auto p = throughput::max_tps(series);
        CHECK(p.count == best);
        CHECK(p.tps * decimal { 21600 } <= decimal { best });
        CHECK(p.tps.to_fixed(2) == oracle_2dp(best, 21600));
    }
}

TEST_CASE("compute_stats picks the averaging interval")
{
    std::vector<throughput::window_count> windows { { obs_start, 21600 } };
    throughput::stats_input in;
    in.chain = chain_id::tezos;
    in.total_transactions = 7890133;
    in.first_block_time = obs_start + 30s;
    in.last_block_time = obs_end - 30s;
    in.windows = windows;
    in.observation_start = obs_start;
    in.observation_end = obs_end;
    in.alleged_tps = decimal { 40 };
    const auto cal = throughput::compute_stats(in);
    CHECK(cal.mode == throughput::average_mode::calendar);
    CHECK(cal.avg_tps.to_fixed(2) == "0.43");
    CHECK(cal.max_tps == decimal { 1 });
    CHECK(cal.alleged_tps == decimal { 40 });

    in.observation_end.reset();
    const auto span = throughput::compute_stats(in);
    CHECK(span.mode == throughput::average_mode::block_span);
    CHECK(span.observation_start == in.first_block_time);
    CHECK(span.avg_tps == throughput::average_tps(7890133, in.first_block_time, in.last_block_time));
}
