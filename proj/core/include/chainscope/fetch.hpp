#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>
#include <chainscope/decimal.hpp>
#include <chainscope/model.hpp>
#include <chainscope/storage.hpp>

namespace chainscope::fetch {
    enum class transport : std::uint8_t { http_rpc, websocket };

    std::string_view transport_name(transport t) noexcept;

    struct backoff_policy {
        std::chrono::milliseconds base { 500 };
        double factor = 2.0;
        // uniform in [1 - jitter, 1 + jitter]
        double jitter = 0.2;
        std::chrono::milliseconds cap { 30000 };
    };

    // Delay before retry number `attempt` (1 for the first retry).
    std::chrono::milliseconds backoff_delay(const backoff_policy &p, unsigned attempt, std::mt19937_64 &rng);

    struct endpoint_spec {
        chain_id chain = chain_id::eosio;
        std::string url;
        transport via = transport::http_rpc;
        // requests per second, retries included
        decimal rate_limit { 10 };
        unsigned max_retries = 5;
        std::chrono::seconds timeout { 30 };
        backoff_policy backoff;
        std::uint64_t jitter_seed = 0;
    };

    // Websocket for XRPL, HTTP RPC for EOSIO and Tezos.
    endpoint_spec default_endpoint(chain_id chain, std::string url);

    // Throws config_error on a wrong transport for the chain, a non-positive rate or an unusable URL.
    void validate(const endpoint_spec &e);

    struct url_parts {
        std::string scheme;
        std::string host;
        std::string port;
        std::string path;
    };

    url_parts parse_url(std::string_view url);

    // Outcome of one request for one height.
    struct response {
        std::optional<std::string> body;
        // true when no answer came back at all (refused, reset, timed out)
        bool transport_failure = false;
        std::string reason;
    };

    class block_source {
    public:
        virtual ~block_source() = default;
        virtual response get(std::uint64_t height) = 0;
    };

    // POST /v1/chain/get_block for EOSIO, GET /chains/main/blocks/<level> for Tezos,
    // websocket "ledger" with expanded transactions for XRPL.
    std::unique_ptr<block_source> make_source(const endpoint_spec &e);

    // Single-line form of a node response; JSON whitespace between tokens is dropped only when the
    // body spans several lines.
    std::string to_line(std::string_view body);

    struct fetch_summary {
        std::uint64_t fetched = 0;
        std::vector<std::uint64_t> failures;
        std::vector<storage::archive_chunk> written;
    };

    // Fetches the heights of [start, end] that no chunk in the archive covers yet. Chunk boundaries sit
    // on the grid start + k * chunk_size; a height that keeps failing splits its cell into separate
    // chunks and is reported in failures. Every successful height is durable before the call returns
    // or throws. Throws endpoint_unavailable when a height gets no answer after all retries.
    fetch_summary fetch_blocks(const endpoint_spec &e, std::uint64_t start, std::uint64_t end,
        storage::archive_writer &archive);
    fetch_summary fetch_blocks(block_source &source, const endpoint_spec &e, std::uint64_t start, std::uint64_t end,
        storage::archive_writer &archive);
}
