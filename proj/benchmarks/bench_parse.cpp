#include <benchmark/benchmark.h>

#include "testkit.hpp"

#include <chainscope/adapters/adapter.hpp>

using namespace chainscope;

namespace {
    std::vector<std::string> lines_for(chain_id chain)
    {
        testkit::synth_options o;
        o.chain = chain;
        o.blocks = 512;
        std::vector<std::string> out;
        for (auto &l : testkit::render_lines(testkit::synth_blocks(o)))
            out.push_back(std::move(l.line));
        return out;
    }

    void bm_parse_block(benchmark::State &state)
    {
        const auto chain = static_cast<chain_id>(state.range(0));
        adapters::parse_options opts;
        opts.payload = static_cast<adapters::payload_mode>(state.range(1));
        const auto lines = lines_for(chain);
        std::int64_t bytes = 0;
        std::size_t i = 0;
        for (auto _ : state) {
            const auto &line = lines[i++ % lines.size()];
            benchmark::DoNotOptimize(adapters::parse_block(chain, line, opts));
            bytes += static_cast<std::int64_t>(line.size());
        }
        state.SetBytesProcessed(bytes);
        state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
    }
    // chain x payload mode (none, detector, full)
    BENCHMARK(bm_parse_block)->ArgsProduct({ { 0, 1, 2 }, { 0, 1, 2 } });

    void bm_render_block(benchmark::State &state)
    {
        const auto chain = static_cast<chain_id>(state.range(0));
        testkit::synth_options o;
        o.chain = chain;
        o.blocks = 512;
        const auto blocks = testkit::synth_blocks(o);
        std::size_t i = 0;
        for (auto _ : state)
            benchmark::DoNotOptimize(adapters::render_block(blocks[i++ % blocks.size()]));
    }
    BENCHMARK(bm_render_block)->DenseRange(0, 2);
}

BENCHMARK_MAIN();
