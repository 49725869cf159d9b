#include <doctest.h>

#include "testkit.hpp"

#include <chainscope/adapters/adapter.hpp>
#include <chainscope/error.hpp>
#include <chainscope/fetch.hpp>

using namespace chainscope;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {
    std::map<std::uint64_t, std::string> node_blocks(chain_id chain, std::uint64_t first, std::size_t n)
    {
        testkit::synth_options o;
        o.chain = chain;
        o.first_height = first;
        o.blocks = n;
        o.max_actions = 3;
        std::map<std::uint64_t, std::string> out;
        for (auto &l : testkit::render_lines(testkit::synth_blocks(o)))
            out.emplace(l.height, std::move(l.line));
        return out;
    }

    fetch::endpoint_spec fast(chain_id chain, std::string url)
    {
        auto e = fetch::default_endpoint(chain, std::move(url));
        e.rate_limit = decimal { 100000 };
        e.backoff.base = 1ms;
        e.timeout = 5s;
        return e;
    }
}

TEST_CASE("backoff delays grow geometrically within the jitter band")
{
    fetch::backoff_policy p;
    std::mt19937_64 rng { 1 };
    for (unsigned attempt = 1; attempt <= 6; ++attempt) {
        const double nominal = std::min(500.0 * (1 << (attempt - 1)), 30000.0);
        for (int i = 0; i < 100; ++i) {
            const auto d = fetch::backoff_delay(p, attempt, rng).count();
            CHECK(static_cast<double>(d) >= std::floor(nominal * 0.8));
            CHECK(static_cast<double>(d) <= std::ceil(nominal * 1.2));
        }
    }
    p.jitter = 0;
    CHECK(fetch::backoff_delay(p, 1, rng) == 500ms);
    CHECK(fetch::backoff_delay(p, 3, rng) == 2000ms);
    CHECK(fetch::backoff_delay(p, 20, rng) == 30000ms);
}

TEST_CASE("endpoint validation and URL parsing")
{
    const auto u = fetch::parse_url("https://api.example.com:8443/base/");
    CHECK(u.scheme == "https");
    CHECK(u.host == "api.example.com");
    CHECK(u.port == "8443");
    CHECK(u.path == "/base");
    const auto w = fetch::parse_url("wss://[::1]/x");
    CHECK(w.host == "::1");
    CHECK(w.port == "443");
    CHECK(fetch::parse_url("http://node").port == "80");
    CHECK_THROWS_AS(fetch::parse_url("node.example.com"), config_error);

    CHECK(fetch::default_endpoint(chain_id::xrpl, "wss://s1").via == fetch::transport::websocket);
    CHECK(fetch::default_endpoint(chain_id::tezos, "http://n").via == fetch::transport::http_rpc);
    CHECK(fetch::transport_name(fetch::transport::websocket) == "WEBSOCKET");
    CHECK_NOTHROW(fetch::validate(fetch::default_endpoint(chain_id::eosio, "https://eos.example")));
    CHECK_THROWS_AS(fetch::validate(fetch::default_endpoint(chain_id::eosio, "wss://eos.example")), config_error);
    auto wrong = fetch::default_endpoint(chain_id::xrpl, "wss://x");
    wrong.via = fetch::transport::http_rpc;
    CHECK_THROWS_AS(fetch::validate(wrong), config_error);
    auto slow = fetch::default_endpoint(chain_id::tezos, "http://x");
    slow.rate_limit = decimal {};
    CHECK_THROWS_AS(fetch::validate(slow), config_error);
}

TEST_CASE("to_line flattens pretty-printed bodies only")
{
    CHECK(fetch::to_line("{\"a\": 1}") == "{\"a\": 1}");
    CHECK(fetch::to_line("{\n  \"a\": \"x y\\\" z\",\n  \"b\": [1, 2]\n}") == "{\"a\":\"x y\\\" z\",\"b\":[1,2]}");
}

TEST_CASE("single height range")
{
    testkit::temp_dir dir;
    testkit::mock_http_node node { chain_id::eosio, node_blocks(chain_id::eosio, 95, 10) };
    storage::archive_writer archive { dir.path(), chain_id::eosio, 10 };
    const auto s = fetch::fetch_blocks(fast(chain_id::eosio, node.url()), 100, 100, archive);
    CHECK(s.fetched == 1);
    CHECK(s.failures.empty());
    REQUIRE(s.written.size() == 1);
    CHECK(s.written[0].range() == height_range { 100, 100 });
}

TEST_CASE("a permanent failure is reported and a rerun fetches only that height")
{
    testkit::temp_dir dir;
    const auto blocks = node_blocks(chain_id::tezos, 1, 10);
    testkit::mock_http_node node { chain_id::tezos, blocks,
        [](std::uint64_t h, unsigned) { return h == 7 ? 500 : 200; } };
    storage::archive_writer archive { dir.path(), chain_id::tezos, 10 };
    auto e = fast(chain_id::tezos, node.url());
    e.max_retries = 2;
    const auto first = fetch::fetch_blocks(e, 1, 10, archive);
    CHECK(first.fetched == 9);
    CHECK(first.failures == std::vector<std::uint64_t> { 7 });
    CHECK(node.requests_for(7) == 3);
    CHECK(archive.missing(1, 10) == std::vector<height_range> { { 7, 7 } });

    node.set_policy({});
    const auto before = node.requests();
    const auto second = fetch::fetch_blocks(e, 1, 10, archive);
    CHECK(second.fetched == 1);
    CHECK(second.failures.empty());
    REQUIRE(second.written.size() == 1);
    CHECK(second.written[0].range() == height_range { 7, 7 });
    CHECK(node.requests() - before == 1);

    const storage::archive_pattern pat { archive.glob(), 1, 10 };
    CHECK(storage::check_integrity(pat).complete());
    std::map<std::uint64_t, std::string> stored;
    storage::scan(pat, [&](std::uint64_t h, std::string_view l) { stored.emplace(h, std::string { l }); });
    CHECK(stored == blocks);
}

TEST_CASE("chunks follow the grid of the range start")
{
    testkit::temp_dir dir;
    testkit::mock_http_node node { chain_id::eosio, node_blocks(chain_id::eosio, 1, 100) };
    storage::archive_writer archive { dir.path(), chain_id::eosio, 10 };
    const auto s = fetch::fetch_blocks(fast(chain_id::eosio, node.url()), 1, 100, archive);
    CHECK(s.fetched == 100);
    REQUIRE(s.written.size() == 10);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(s.written[i].range() == height_range { 1 + 10 * i, 10 + 10 * i });
    const auto again = fetch::fetch_blocks(fast(chain_id::eosio, node.url()), 1, 100, archive);
    CHECK(again.fetched == 0);
    CHECK(again.written.empty());
}

TEST_CASE("transient failures are retried")
{
    testkit::temp_dir dir;
    testkit::mock_http_node node { chain_id::eosio, node_blocks(chain_id::eosio, 1, 300), testkit::random_failures(0.3, 9) };
    storage::archive_writer archive { dir.path(), chain_id::eosio, 50 };
    const auto s = fetch::fetch_blocks(fast(chain_id::eosio, node.url()), 1, 300, archive);
    CHECK(s.fetched == 300);
    CHECK(s.failures.empty());
    CHECK(node.requests() > 300);
}

TEST_CASE("an unreachable endpoint is named")
{
    testkit::temp_dir dir;
    storage::archive_writer archive { dir.path(), chain_id::eosio, 10 };
    const auto url = "http://127.0.0.1:" + std::to_string(testkit::closed_port());
    auto e = fast(chain_id::eosio, url);
    e.max_retries = 1;
    try {
        fetch::fetch_blocks(e, 1, 5, archive);
        FAIL("expected endpoint_unavailable");
    } catch (const endpoint_unavailable &ex) {
        CHECK(ex.endpoint() == url);
        CHECK(std::string { ex.what() }.find(url) != std::string::npos);
    }
    CHECK(archive.missing(1, 5) == std::vector<height_range> { { 1, 5 } });
}

TEST_CASE("answers for another height are rejected")
{
    testkit::temp_dir dir;
    auto blocks = node_blocks(chain_id::eosio, 1, 5);
    blocks[3] = blocks[2];
    testkit::mock_http_node node { chain_id::eosio, blocks };
    storage::archive_writer archive { dir.path(), chain_id::eosio, 10 };
    auto e = fast(chain_id::eosio, node.url());
    e.max_retries = 0;
    const auto s = fetch::fetch_blocks(e, 1, 5, archive);
    CHECK(s.failures == std::vector<std::uint64_t> { 3 });
    CHECK(s.fetched == 4);
}

TEST_CASE("XRPL ledgers over websocket, with dropped connections")
{
    testkit::temp_dir dir;
    const auto ledgers = node_blocks(chain_id::xrpl, 50399027, 40);
    testkit::mock_ws_node node { ledgers, [](std::uint64_t h, unsigned attempt) { return h % 7 == 0 && attempt == 0 ? 0 : 200; } };
    storage::archive_writer archive { dir.path(), chain_id::xrpl, 16 };
    const auto s = fetch::fetch_blocks(fast(chain_id::xrpl, node.url()), 50399027, 50399066, archive);
    CHECK(s.fetched == 40);
    CHECK(s.failures.empty());
    const storage::archive_pattern pat { archive.glob(), 50399027, 50399066 };
    CHECK(storage::check_integrity(pat).complete());
    storage::scan(pat, [&](std::uint64_t h, std::string_view l) {
        CHECK(adapters::parse_block(chain_id::xrpl, l) == adapters::parse_block(chain_id::xrpl, ledgers.at(h)));
    });
}

TEST_CASE("websocket error responses count as failures")
{
    testkit::temp_dir dir;
    testkit::mock_ws_node node { node_blocks(chain_id::xrpl, 1, 5), [](std::uint64_t h, unsigned) { return h == 4 ? 503 : 200; } };
    storage::archive_writer archive { dir.path(), chain_id::xrpl, 16 };
    auto e = fast(chain_id::xrpl, node.url());
    e.max_retries = 1;
    const auto s = fetch::fetch_blocks(e, 1, 5, archive);
    CHECK(s.failures == std::vector<std::uint64_t> { 4 });
    CHECK(node.requests_for(4) == 2);
}

TEST_CASE("property: repeated passes converge to a gap-free archive")
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        testkit::temp_dir dir;
        const auto blocks = node_blocks(chain_id::eosio, 1, 400);
        testkit::mock_http_node node { chain_id::eosio, blocks, testkit::random_failures(0.05, seed) };
        storage::archive_writer archive { dir.path(), chain_id::eosio, 25 };
        auto e = fast(chain_id::eosio, node.url());
        e.max_retries = 0;
        std::uint64_t total = 0;
        for (int pass = 0; pass < 10 && !archive.missing(1, 400).empty(); ++pass)
            total += fetch::fetch_blocks(e, 1, 400, archive).fetched;
        CHECK(total == 400);
        CHECK(fetch::fetch_blocks(e, 1, 400, archive).fetched == 0);
        CHECK(storage::check_integrity({ archive.glob(), 1, 400 }).complete());
    }
}
