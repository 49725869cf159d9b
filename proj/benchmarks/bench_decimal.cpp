#include <benchmark/benchmark.h>

#include <chainscope/decimal.hpp>

#include <random>

using chainscope::decimal;

namespace {
    std::vector<std::string> amounts(std::size_t n)
    {
        std::mt19937_64 rng { 7 };
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(std::to_string(rng() % 100000000) + "." + std::to_string(rng() % 10000));
        return out;
    }

    void bm_parse(benchmark::State &state)
    {
        const auto texts = amounts(1024);
        std::size_t i = 0;
        for (auto _ : state)
            benchmark::DoNotOptimize(decimal::parse(texts[i++ & 1023]));
        state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
    }
    BENCHMARK(bm_parse);

    void bm_sum(benchmark::State &state)
    {
        std::vector<decimal> values;
        for (const auto &t : amounts(1024))
            values.push_back(decimal::parse(t));
        for (auto _ : state) {
            decimal total;
            for (const auto &v : values)
                total += v;
            benchmark::DoNotOptimize(total);
        }
        state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 1024);
    }
    BENCHMARK(bm_sum);

    void bm_multiply_rate(benchmark::State &state)
    {
        const auto amount = decimal::parse("0.00123456");
        const auto rate = decimal { 36050 };
        for (auto _ : state)
            benchmark::DoNotOptimize(amount * rate);
    }
    BENCHMARK(bm_multiply_rate);

    void bm_ratio_to_fixed(benchmark::State &state)
    {
        const decimal total { 631445236 };
        const decimal seconds { 18403200 };
        for (auto _ : state)
            benchmark::DoNotOptimize(decimal::ratio(total, seconds).to_fixed(2));
    }
    BENCHMARK(bm_ratio_to_fixed);
}

BENCHMARK_MAIN();
