#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <chainscope/decimal.hpp>
#include <chainscope/model.hpp>
#include <chainscope/time.hpp>

namespace chainscope::throughput {
    inline constexpr std::chrono::seconds peak_window = std::chrono::hours { 6 };

    // total / seconds(start, end). Throws empty_window when end <= start.
    decimal average_tps(std::uint64_t total, timestamp start, timestamp end);

    struct window_count {
        timestamp start {};
        std::uint64_t count = 0;

        bool operator==(const window_count &) const = default;
    };

    struct peak {
        decimal tps;
        timestamp window_start {};
        std::uint64_t count = 0;
    };

    // Busiest window divided by the full window width, earliest window on ties.
    // A short trailing window still uses the full width. Throws empty_window on an empty series.
    peak max_tps(std::span<const window_count> series, std::chrono::seconds width = peak_window);

    // Which interval average_tps divides by.
    enum class average_mode : std::uint8_t {
        calendar,    // configured observation start/end
        block_span   // first to last block timestamp
    };

    struct throughput_stats {
        chain_id chain = chain_id::eosio;
        timestamp observation_start {};
        timestamp observation_end {};
        average_mode mode = average_mode::calendar;
        std::uint64_t first_height = 0;
        std::uint64_t last_height = 0;
        std::uint64_t block_count = 0;
        std::uint64_t total_transactions = 0;
        decimal avg_tps;
        decimal max_tps;
        timestamp max_window_start {};
        std::optional<decimal> alleged_tps;
    };

    struct stats_input {
        chain_id chain = chain_id::eosio;
        std::uint64_t first_height = 0;
        std::uint64_t last_height = 0;
        std::uint64_t block_count = 0;
        std::uint64_t total_transactions = 0;
        timestamp first_block_time {};
        timestamp last_block_time {};
        std::span<const window_count> windows;
        std::optional<timestamp> observation_start;
        std::optional<timestamp> observation_end;
        std::optional<decimal> alleged_tps;
    };

    // Calendar mode when both observation bounds are given, block_span otherwise.
    throughput_stats compute_stats(const stats_input &in);
}
