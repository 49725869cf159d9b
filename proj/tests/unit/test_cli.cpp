#include <doctest.h>

#include "testkit.hpp"
#include "cli.hpp"

#include <chainscope/error.hpp>

#include <cstdlib>
#include <sstream>
#include <nlohmann/json.hpp>

using namespace chainscope;
namespace fs = std::filesystem;

namespace {
    struct outcome {
        int code;
        std::string out;
        std::string err;
    };

    outcome run(std::vector<std::string> args)
    {
        std::ostringstream out, err;
        const auto code = cli::run(args, out, err);
        return { code, out.str(), err.str() };
    }

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

    std::vector<std::string> fetch_args(const std::string &url, const fs::path &out)
    {
        return { "fetch", "--chain", "eos", "--endpoint", url, "--start", "1", "--end", "100", "--out", out.string(),
            "--chunk-size", "10", "--rate", "100000", "--backoff-ms", "1", "--timeout", "5" };
    }

    std::size_t chunk_count(const fs::path &dir)
    {
        std::size_t n = 0;
        for (const auto &e : fs::directory_iterator { dir })
            n += e.is_regular_file() && e.path().string().ends_with(".jsonl.gz");
        return n;
    }

    // an EOSIO archive of 500 blocks in chunks of 50 plus a config running the analysis processors over it
    struct workspace {
        testkit::temp_dir dir;
        fs::path config;
        std::vector<storage::archive_chunk> chunks;

        explicit workspace(std::string processors = "")
        {
            testkit::synth_options o;
            o.blocks = 500;
            o.seed = 5;
            const auto blocks = testkit::synth_blocks(o);
            const auto lines = testkit::render_lines(blocks);
            chunks = testkit::write_archive(dir / "archive", chain_id::eosio, lines, 50);
            if (processors.empty()) {
                processors = R"([
                    { "Name": "Count", "Type": "count-transactions", "Params": { "Duration": "6h" } },
                    { "Name": "Distribution", "Type": "action-distribution" },
                    { "Name": "Receivers", "Type": "group-actions-over-time", "Params": { "By": "receiver", "Duration": "6h" } },
                    { "Name": "TopSenders", "Type": "top-accounts", "Params": { "Direction": "sent", "N": 10 } }
                ])";
            }
            config = dir / "pipeline.json";
            testkit::write_text(config,
                R"({ "Pattern": ")" + testkit::archive_glob(dir / "archive", chain_id::eosio)
                    + R"(", "StartBlock": 1, "EndBlock": 500, "Chain": "eos", "Processors": )" + processors + "}");
        }
    };
}

TEST_CASE("exit codes follow the failure kind")
{
    auto code = [](auto thrower) {
        try {
            thrower();
        } catch (...) {
            return cli::exit_code_for(std::current_exception());
        }
        return cli::internal_failure;
    };
    CHECK(code([] { throw config_error("x"); }) == cli::config_failure);
    CHECK(code([] { throw endpoint_unavailable("http://x", "down"); }) == cli::network_failure);
    CHECK(code([] { throw missing_chunk({ { 1, 2 } }); }) == cli::integrity_failure);
    CHECK(code([] { throw std::runtime_error("x"); }) == cli::internal_failure);
    CHECK(run({}).code == cli::config_failure);
    CHECK(run({ "frobnicate" }).code == cli::config_failure);
    CHECK(run({ "--version" }).code == cli::success);
}

TEST_CASE("fetch writes ten chunks and a rerun fetches nothing")
{
    testkit::temp_dir dir;
    testkit::mock_http_node node { chain_id::eosio, node_blocks(chain_id::eosio, 1, 100) };
    const auto first = run(fetch_args(node.url(), dir / "archive"));
    CHECK(first.code == cli::success);
    CHECK(first.out.find("fetched 100 blocks into 10 chunks") != std::string::npos);
    CHECK(chunk_count(dir / "archive") == 10);
    const auto before = node.requests();
    const auto second = run(fetch_args(node.url(), dir / "archive"));
    CHECK(second.code == cli::success);
    CHECK(second.out.find("fetched 0 blocks") != std::string::npos);
    CHECK(node.requests() == before);
    CHECK(chunk_count(dir / "archive") == 10);

    const auto check = run({ "check", "--pattern", testkit::archive_glob(dir / "archive", chain_id::eosio), "--start", "1", "--end",
        "100" });
    CHECK(check.code == cli::success);
    const auto wider = run({ "check", "--pattern", testkit::archive_glob(dir / "archive", chain_id::eosio), "--start", "1", "--end",
        "120" });
    CHECK(wider.code == cli::integrity_failure);
    CHECK(wider.out.find("101-120") != std::string::npos);
}

TEST_CASE("fetch names an unreachable endpoint")
{
    testkit::temp_dir dir;
    const auto url = "http://127.0.0.1:" + std::to_string(testkit::closed_port());
    auto args = fetch_args(url, dir / "archive");
    args.insert(args.end(), { "--retries", "1" });
    const auto r = run(args);
    CHECK(r.code == cli::network_failure);
    CHECK(r.err.find(url) != std::string::npos);
}

TEST_CASE("fetch takes the endpoint from the environment")
{
    testkit::temp_dir dir;
    testkit::mock_http_node node { chain_id::eosio, node_blocks(chain_id::eosio, 1, 20) };
    CHECK(cli::endpoint_variable(chain_id::eosio) == "CHAINSCOPE_ENDPOINT_EOS");
    CHECK(cli::endpoint_variable(chain_id::xrpl) == "CHAINSCOPE_ENDPOINT_XRP");
    ::unsetenv("CHAINSCOPE_ENDPOINT_EOS");
    std::vector<std::string> args { "fetch", "--chain", "eos", "--start", "1", "--end", "20", "--out", (dir / "a").string(),
        "--chunk-size", "10", "--rate", "100000" };
    const auto missing = run(args);
    CHECK(missing.code == cli::config_failure);
    CHECK(missing.err.find("CHAINSCOPE_ENDPOINT_EOS") != std::string::npos);
    ::setenv("CHAINSCOPE_ENDPOINT_EOS", node.url().c_str(), 1);
    const auto r = run(args);
    ::unsetenv("CHAINSCOPE_ENDPOINT_EOS");
    CHECK(r.code == cli::success);
    CHECK(chunk_count(dir / "a") == 2);
}

TEST_CASE("fetch rejects bad options")
{
    testkit::temp_dir dir;
    CHECK(run({ "fetch", "--chain", "btc", "--endpoint", "http://x", "--start", "1", "--end", "2", "--out", dir.path().string() }).code
        == cli::config_failure);
    CHECK(run({ "fetch", "--chain", "eos", "--endpoint", "http://x", "--start", "5", "--end", "2", "--out", dir.path().string() }).code
        == cli::config_failure);
    CHECK(run({ "fetch", "--chain", "xrp", "--endpoint", "http://x", "--start", "1", "--end", "2", "--out", dir.path().string() }).code
        == cli::config_failure);
}

TEST_CASE("process writes results and a manifest, identically on rerun")
{
    workspace ws;
    const auto out = ws.dir / "results";
    const auto r = run({ "process", ws.config.string(), "--out", out.string(), "--workers", "2" });
    REQUIRE(r.code == cli::success);
    for (const auto *name : { "Count", "Distribution", "Receivers", "TopSenders" }) {
        CHECK(fs::exists(out / (std::string { name } + ".json")));
        CHECK(fs::exists(out / (std::string { name } + ".csv")));
    }
    const auto manifest = nlohmann::json::parse(testkit::read_text(out / "manifest.json"));
    CHECK(manifest["blocks"] == 500);
    CHECK(manifest["chunks"] == 10);
    CHECK(manifest["outputs"].size() == 4);

    std::map<std::string, std::string> first;
    for (const auto &e : fs::directory_iterator { out })
        first[e.path().filename().string()] = testkit::read_text(e.path());
    for (const auto *workers : { "1", "8" }) {
        REQUIRE(run({ "process", ws.config.string(), "--out", out.string(), "--workers", workers }).code == cli::success);
        for (const auto &[name, text] : first) {
            CAPTURE(name);
            if (name == "manifest.json") {
                auto a = nlohmann::json::parse(text), b = nlohmann::json::parse(testkit::read_text(out / name));
                for (auto *m : { &a, &b })
                    for (const auto *k : { "started_at", "duration_seconds", "workers" })
                        m->erase(k);
                CHECK(a == b);
            } else {
                CHECK(testkit::read_text(out / name) == text);
            }
        }
    }
}

TEST_CASE("process reports config errors and missing chunks")
{
    workspace bad { R"([{ "Name": "X", "Type": "count-everything" }])" };
    const auto r = run({ "process", bad.config.string(), "--out", (bad.dir / "r").string() });
    CHECK(r.code == cli::config_failure);
    CHECK(r.err.find("count-everything") != std::string::npos);

    workspace ws;
    CHECK(run({ "process", ws.config.string(), "--strict", "--allow-gaps" }).code == cli::config_failure);
    CHECK(run({ "process", (ws.dir / "absent.json").string() }).code == cli::config_failure);
    fs::remove(ws.chunks[3].path);
    const auto gap = run({ "process", ws.config.string(), "--out", (ws.dir / "r").string() });
    CHECK(gap.code == cli::integrity_failure);
    CHECK(gap.err.find("[151,200]") != std::string::npos);
    const auto allowed = run({ "process", ws.config.string(), "--out", (ws.dir / "r").string(), "--allow-gaps" });
    CHECK(allowed.code == cli::success);
    CHECK(allowed.out.find("151-200") != std::string::npos);
}

TEST_CASE("export writes the distribution and flow tables")
{
    workspace ws;
    const auto results = ws.dir / "results";
    REQUIRE(run({ "process", ws.config.string(), "--out", results.string() }).code == cli::success);
    const auto tables_dir = ws.dir / "tables";
    REQUIRE(run({ "export", results.string(), "--out", tables_dir.string() }).code == cli::success);
    const auto csv = testkit::read_text(tables_dir / "distribution.csv");
    std::istringstream in { csv };
    std::string line;
    std::getline(in, line);
    CHECK(line == "chain,category,name,count,percent");
    decimal sum;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        sum += decimal::parse(line.substr(line.rfind(',') + 1));
        ++rows;
    }
    CHECK(rows > 0);
    CHECK(sum >= decimal::parse("99.9"));
    CHECK(sum <= decimal::parse("100.1"));

    REQUIRE(run({ "export", results.string(), "--out", tables_dir.string(), "--format", "json", "--tables", "distribution" }).code
        == cli::success);
    CHECK(nlohmann::json::parse(testkit::read_text(tables_dir / "distribution.json")).at("distribution").size() == rows);

    const auto no_flows = run({ "export", results.string(), "--out", tables_dir.string(), "--tables", "value_flows" });
    CHECK(no_flows.code == cli::config_failure);
    CHECK(run({ "export", results.string(), "--out", tables_dir.string(), "--tables", "bogus" }).code == cli::config_failure);
    CHECK(run({ "export", (ws.dir / "nothing").string(), "--out", tables_dir.string() }).code == cli::config_failure);
}

TEST_CASE("export of XRPL flows carries the flow columns")
{
    testkit::temp_dir dir;
    testkit::synth_options o;
    o.chain = chain_id::xrpl;
    o.blocks = 200;
    const auto lines = testkit::render_lines(testkit::synth_blocks(o));
    testkit::write_archive(dir / "archive", chain_id::xrpl, lines, 100);
    testkit::write_text(dir / "xrp.json",
        R"({ "Pattern": ")" + testkit::archive_glob(dir / "archive", chain_id::xrpl)
            + R"(", "StartBlock": 1, "EndBlock": 200, "Chain": "xrp", "Processors": [
                { "Name": "Flows", "Type": "value-flow" }, { "Name": "Values", "Type": "payment-values" } ] })");
    REQUIRE(run({ "process", (dir / "xrp.json").string(), "--out", (dir / "r").string() }).code == cli::success);
    REQUIRE(run({ "export", (dir / "r").string(), "--out", (dir / "t").string(), "--tables", "value_flows" }).code == cli::success);
    const auto csv = testkit::read_text(dir / "t" / "value_flows.csv");
    CHECK(csv.substr(0, csv.find('\n')) == "sender_entity,currency,receiver_entity,xrp_value");
}
