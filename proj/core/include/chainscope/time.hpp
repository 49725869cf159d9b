#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace chainscope {
    // UTC instant at second precision; sub-second detail is discarded on ingestion.
    using timestamp = std::chrono::sys_seconds;

    // XRPL close times count seconds from 2000-01-01T00:00:00Z.
    inline constexpr std::int64_t ripple_epoch_offset = 946684800;

    std::int64_t epoch_seconds(timestamp t) noexcept;
    timestamp from_epoch_seconds(std::int64_t s) noexcept;

    // Accepts "YYYY-MM-DDTHH:MM:SS[.fff][Z|+00:00]" and "YYYY-MM-DD". Offsets other than UTC are applied.
    timestamp parse_utc(std::string_view text);
    bool try_parse_utc(std::string_view text, timestamp &out) noexcept;
    // "YYYY-MM-DDTHH:MM:SSZ"
    std::string format_utc(timestamp t);

    // "6h", "30m", "1d", "45s", "2h30m"
    std::chrono::seconds parse_duration(std::string_view text);
    std::string format_duration(std::chrono::seconds d);

    // floor-aligned window start on the UTC epoch grid
    timestamp window_start(timestamp t, std::chrono::seconds width) noexcept;
}
