#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>
#include <chainscope/accounts.hpp>
#include <chainscope/adapters/adapter.hpp>
#include <chainscope/anomaly.hpp>
#include <chainscope/classification.hpp>
#include <chainscope/model.hpp>
#include <chainscope/storage.hpp>

namespace chainscope::pipeline {
    // ---- configuration ----

    struct processor_config {
        std::string name;
        std::string type;
        // the "Params" object as compact JSON text, "{}" when absent
        std::string params_json = "{}";

        bool operator==(const processor_config &) const = default;
    };

    struct pipeline_config {
        std::string pattern;
        std::uint64_t start_block = 0;
        std::uint64_t end_block = 0;
        std::vector<processor_config> processors;
        std::optional<chain_id> chain;
        std::optional<std::filesystem::path> rules;
        std::optional<std::filesystem::path> rates;
        std::optional<std::filesystem::path> accounts;
        std::optional<timestamp> observation_start;
        std::optional<timestamp> observation_end;
        std::optional<decimal> alleged_tps;
        std::optional<std::filesystem::path> output_dir;
    };

    // Relative paths in the document are resolved against base_dir. Errors name the offending field.
    pipeline_config parse_config(std::string_view json_text, const std::filesystem::path &base_dir = {});
    pipeline_config load_config(const std::filesystem::path &path);

    // Explicit "Chain", else the chain token that prefixes the pattern's file name.
    chain_id config_chain(const pipeline_config &cfg);

    inline constexpr std::string_view processor_types[] = { "count-transactions", "group-actions", "group-actions-over-time",
        "top-accounts", "action-distribution", "wash-trades", "boomerang", "spam-accounts", "payment-values", "value-flow" };

    // ---- results ----

    enum class result_kind : std::uint8_t { scalar, keyed_histogram, time_series, table };
    std::string_view result_kind_name(result_kind k) noexcept;

    using histogram = std::map<std::string, std::uint64_t, std::less<>>;
    // window start (epoch seconds) -> counts
    using time_series = std::map<std::int64_t, histogram>;

    struct processor_result {
        std::string name;
        std::string type;
        chain_id chain = chain_id::eosio;
        result_kind kind = result_kind::scalar;
        std::map<std::string, std::string> params;
        std::map<std::string, std::string> scalars;
        histogram counts;
        std::int64_t window_seconds = 0;
        time_series series;
        std::vector<std::string> columns;
        std::vector<std::vector<std::string>> rows;

        bool operator==(const processor_result &) const = default;
    };

    // Canonical serializations; equal results give byte-identical text.
    std::string result_to_json(const processor_result &r);
    std::string result_to_csv(const processor_result &r);
    processor_result result_from_json(std::string_view text);

    // RFC 4180 quoting when needed
    std::string csv_field(std::string_view v);

    // ---- processors ----

    struct run_context {
        chain_id chain = chain_id::eosio;
        classification_rules rules;
        anomaly::rate_table rates;
        accounts::account_registry registry;
        std::optional<timestamp> observation_start;
        std::optional<timestamp> observation_end;
        std::optional<decimal> alleged_tps;
    };

    // Per-partition state. Accumulators of one processor merge associatively; merging in partition
    // order reproduces the sequential result.
    class accumulator {
    public:
        virtual ~accumulator() = default;
        // categories[i] classifies b.actions[i]
        virtual void consume(const block &b, std::span<const action_category> categories) = 0;
        virtual void merge(accumulator &&other) = 0;
        virtual processor_result finish() = 0;
    };

    class processor {
    public:
        virtual ~processor() = default;
        virtual const std::string &name() const noexcept = 0;
        virtual std::string_view type() const noexcept = 0;
        // what parse_block must produce for this processor
        virtual adapters::parse_options needs() const noexcept = 0;
        virtual std::unique_ptr<accumulator> start() const = 0;
    };

    // Throws config_error naming the type or the bad parameter.
    std::unique_ptr<processor> make_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx);

    // Union of the parse requirements of several processors.
    adapters::parse_options combined_needs(std::span<const std::unique_ptr<processor>> processors);

    // ---- execution ----

    enum class malformed_policy : std::uint8_t { skip, abort };

    struct run_options {
        unsigned workers = 1;
        malformed_policy on_malformed = malformed_policy::skip;
        bool allow_gaps = false;
        // malformed lines remembered for the manifest
        std::size_t skipped_sample_cap = 20;
    };

    struct skipped_line {
        std::string chunk;
        std::uint64_t line_number = 0;
        std::string reason;
    };

    struct run_summary {
        std::vector<processor_result> results;
        std::uint64_t chunks = 0;
        std::uint64_t lines_read = 0;
        std::uint64_t blocks = 0;
        std::uint64_t skipped_lines = 0;
        std::vector<skipped_line> skipped_samples;
        std::vector<height_range> gaps;
    };

    // One pass over the archive. Chunks are mapped in parallel into private accumulators and merged in
    // chunk order, so results do not depend on the worker count. Throws missing_chunk on name-level gaps
    // unless allow_gaps; malformed_block on a bad line under malformed_policy::abort.
    run_summary run_pipeline(const std::vector<processor_config> &processors, const storage::archive_pattern &pattern,
        std::shared_ptr<const run_context> ctx, const run_options &opts = {});

    // Same processors over in-memory blocks, single-threaded.
    std::vector<processor_result> run_blocks(const std::vector<processor_config> &processors, std::span<const block> blocks,
        std::shared_ptr<const run_context> ctx);

    // Loads rules, rates and registry named by the config; defaults for what is absent.
    std::shared_ptr<run_context> make_context(const pipeline_config &cfg);

    // ---- direct forms ----

    enum class group_key : std::uint8_t { sender, receiver, name, category, error_code };
    std::optional<group_key> parse_group_key(std::string_view text) noexcept;
    std::string_view group_key_name(group_key k) noexcept;

    histogram group_actions(std::span<const block> blocks, group_key by, const classification_rules &rules);

    // Each action lands in window floor(epoch_seconds / duration).
    time_series group_actions_over_time(std::span<const block> blocks, group_key by, std::chrono::seconds duration,
        const classification_rules &rules);

    enum class direction : std::uint8_t { sent, received };

    struct account_rank {
        std::string account;
        std::uint64_t count = 0;
        std::uint64_t unique_counterparties = 0;
        // count / unique_counterparties, exact
        decimal avg_per_counterparty;

        bool operator==(const account_rank &) const = default;
    };

    // Actions with both a sender and a receiver, ranked by count then account name.
    std::vector<account_rank> top_accounts(std::span<const block> blocks, direction dir, std::size_t n,
        std::optional<std::string> name_filter = std::nullopt);

    struct distribution_row {
        action_category category = action_category::other;
        std::string name;
        std::uint64_t count = 0;
        // tenths of a percent; the rows sum to exactly 1000 when any action exists
        std::uint64_t permille = 0;

        bool operator==(const distribution_row &) const = default;
    };

    // Largest-remainder rounding to one decimal place; ties go to the earlier (category, name).
    std::vector<distribution_row> action_distribution(std::span<const block> blocks, const classification_rules &rules);
    std::vector<distribution_row> apportion(std::map<std::pair<action_category, std::string>, std::uint64_t> counts);
    std::string format_permille(std::uint64_t permille);
}
