#include <chainscope/error.hpp>
#include <chainscope/throughput.hpp>

namespace chainscope::throughput {
    decimal average_tps(std::uint64_t total, timestamp start, timestamp end)
    {
        if (end <= start)
            throw empty_window("observation window " + format_utc(start) + " .. " + format_utc(end) + " is empty");
        const auto seconds = (end - start).count();
        return decimal::ratio(decimal { total }, decimal { static_cast<std::int64_t>(seconds) });
    }

    peak max_tps(std::span<const window_count> series, std::chrono::seconds width)
    {
        if (series.empty())
            throw empty_window("no throughput windows");
        if (width.count() <= 0)
            throw config_error("window width must be positive");
        const window_count *best = &series.front();
        for (const auto &w : series) {
            if (w.count > best->count || (w.count == best->count && w.start < best->start))
                best = &w;
        }
        return { decimal::ratio(decimal { best->count }, decimal { static_cast<std::int64_t>(width.count()) }), best->start,
            best->count };
    }

    throughput_stats compute_stats(const stats_input &in)
    {
        throughput_stats s;
        s.chain = in.chain;
        s.first_height = in.first_height;
        s.last_height = in.last_height;
        s.block_count = in.block_count;
        s.total_transactions = in.total_transactions;
        s.alleged_tps = in.alleged_tps;
        if (in.observation_start && in.observation_end) {
            s.mode = average_mode::calendar;
            s.observation_start = *in.observation_start;
            s.observation_end = *in.observation_end;
        } else {
            s.mode = average_mode::block_span;
            s.observation_start = in.first_block_time;
            s.observation_end = in.last_block_time;
        }
        s.avg_tps = average_tps(s.total_transactions, s.observation_start, s.observation_end);
        if (!in.windows.empty()) {
            const auto p = max_tps(in.windows);
            s.max_tps = p.tps;
            s.max_window_start = p.window_start;
        }
        return s;
    }
}
