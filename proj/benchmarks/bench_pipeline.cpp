#include <benchmark/benchmark.h>

#include "testkit.hpp"

#include <chainscope/pipeline.hpp>

using namespace chainscope;

namespace {
    const std::vector<pipeline::processor_config> study_processors {
        { "TransactionsCount", "count-transactions", R"({"Duration":"6h"})" },
        { "CategoriesOverTime", "group-actions-over-time", R"({"By":"category","Duration":"6h"})" },
        { "ActionDistribution", "action-distribution", "{}" },
        { "TopReceivers", "top-accounts", R"({"Direction":"received","N":10})" },
    };

    // archive of 20,000 EOSIO blocks in chunks of 1,000, written once per process
    struct fixture {
        testkit::temp_dir dir { "chainscope-bench" };
        storage::archive_pattern pattern;
        std::vector<block> blocks;

        fixture()
        {
            testkit::synth_options o;
            o.blocks = 20000;
            o.seed = 3;
            blocks = testkit::synth_blocks(o);
            testkit::write_archive(dir.path(), chain_id::eosio, testkit::render_lines(blocks), 1000);
            pattern = { testkit::archive_glob(dir.path(), chain_id::eosio), 1, o.blocks };
        }
    };

    fixture &shared()
    {
        static fixture f;
        return f;
    }

    std::shared_ptr<pipeline::run_context> eos_context()
    {
        auto ctx = std::make_shared<pipeline::run_context>();
        ctx->rules = default_rules(chain_id::eosio);
        return ctx;
    }

    void bm_run_pipeline(benchmark::State &state)
    {
        auto &f = shared();
        const auto ctx = eos_context();
        pipeline::run_options opts;
        opts.workers = static_cast<unsigned>(state.range(0));
        for (auto _ : state)
            benchmark::DoNotOptimize(pipeline::run_pipeline(study_processors, f.pattern, ctx, opts));
        state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(f.blocks.size()));
    }
    BENCHMARK(bm_run_pipeline)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

    void bm_run_blocks(benchmark::State &state)
    {
        auto &f = shared();
        const auto ctx = eos_context();
        for (auto _ : state)
            benchmark::DoNotOptimize(pipeline::run_blocks(study_processors, f.blocks, ctx));
        state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(f.blocks.size()));
    }
    BENCHMARK(bm_run_blocks)->Unit(benchmark::kMillisecond);

    void bm_scan(benchmark::State &state)
    {
        auto &f = shared();
        for (auto _ : state) {
            std::uint64_t bytes = 0;
            storage::scan(f.pattern, [&](std::uint64_t, std::string_view line) { bytes += line.size(); });
            benchmark::DoNotOptimize(bytes);
        }
    }
    BENCHMARK(bm_scan)->Unit(benchmark::kMillisecond);
}

BENCHMARK_MAIN();
