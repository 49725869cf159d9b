#include <doctest.h>

#include "testkit.hpp"

#include <chainscope/error.hpp>
#include <chainscope/export.hpp>

#include <nlohmann/json.hpp>

using namespace chainscope;
namespace fs = std::filesystem;

namespace {
    std::vector<pipeline::processor_result> sample_results()
    {
        std::vector<pipeline::processor_result> out;
        for (const auto chain : { chain_id::eosio, chain_id::tezos, chain_id::xrpl }) {
            testkit::synth_options o;
            o.chain = chain;
            o.blocks = 300;
            o.seed = 11 + static_cast<std::uint64_t>(chain);
            const auto blocks = testkit::synth_blocks(o);
            auto ctx = std::make_shared<pipeline::run_context>();
            ctx->chain = chain;
            ctx->rules = default_rules(chain);
            std::vector<pipeline::processor_config> procs {
                { "Count", "count-transactions", "{}" },
                { "Distribution", "action-distribution", "{}" },
                { "Categories", "group-actions-over-time", R"({"By":"category","Duration":"6h"})" },
                { "TopReceivers", "top-accounts", R"({"Direction":"received","N":5})" },
            };
            if (chain == chain_id::xrpl) {
                procs.push_back({ "Values", "payment-values", "{}" });
                procs.push_back({ "Flows", "value-flow", "{}" });
            }
            auto rs = pipeline::run_blocks(procs, blocks, ctx);
            out.insert(out.end(), rs.begin(), rs.end());
        }
        return out;
    }

    const tables::table &find(const std::vector<tables::table> &ts, std::string_view name)
    {
        for (const auto &t : ts) {
            if (t.name == name)
                return t;
        }
        FAIL("no table " << name);
        throw std::logic_error("unreachable");
    }
}

TEST_CASE("schemas fix the documented columns")
{
    std::map<std::string, std::vector<std::string>> cols;
    for (const auto &s : tables::schemas())
        cols[std::string { s.name }] = { s.columns.begin(), s.columns.end() };
    CHECK(cols.at("distribution") == std::vector<std::string> { "chain", "category", "name", "count", "percent" });
    CHECK(cols.at("value_flows") == std::vector<std::string> { "sender_entity", "currency", "receiver_entity", "xrp_value" });
    CHECK(cols.size() == tables::schemas().size());
}

TEST_CASE("distribution percentages sum to 100 per chain")
{
    const auto results = sample_results();
    const auto built = tables::build_tables(results);
    const auto &dist = find(built, "distribution");
    CHECK(dist.columns == std::vector<std::string> { "chain", "category", "name", "count", "percent" });
    std::map<std::string, decimal> sums;
    for (const auto &row : dist.rows)
        sums[row[0]] += decimal::parse(row[4]);
    REQUIRE(sums.size() == 3);
    for (const auto &[chain, sum] : sums) {
        CAPTURE(chain);
        CHECK(sum >= decimal::parse("99.9"));
        CHECK(sum <= decimal::parse("100.1"));
    }
    for (const auto &t : built)
        for (const auto &row : t.rows)
            CHECK(row.size() == t.columns.size());
}

TEST_CASE("tables without a source are left out unless requested")
{
    const auto results = sample_results();
    const auto built = tables::build_tables(results);
    std::set<std::string> names;
    for (const auto &t : built)
        names.insert(t.name);
    CHECK(names.contains("value_flows"));
    CHECK(names.contains("datasets"));
    CHECK_FALSE(names.contains("anomalies"));

    CHECK_THROWS_AS(tables::build_tables(results, { "anomalies" }), missing_result);
    CHECK_THROWS_AS(tables::build_tables(results, { "no_such_table" }), config_error);
    const auto only = tables::build_tables(results, { "value_flows" });
    REQUIRE(only.size() == 1);
    CHECK(only[0].columns == std::vector<std::string> { "sender_entity", "currency", "receiver_entity", "xrp_value" });
}

TEST_CASE("table output formats")
{
    tables::table t { "value_flows", { "sender_entity", "currency", "receiver_entity", "xrp_value" },
        { { "Bitstamp", "BTC", "rX, Inc", "72100" }, { "a\"b", "USD", "c", "2" } } };
    CHECK(tables::table_to_csv(t)
        == "sender_entity,currency,receiver_entity,xrp_value\nBitstamp,BTC,\"rX, Inc\",72100\n\"a\"\"b\",USD,c,2\n");
    const auto j = nlohmann::json::parse(tables::table_to_json(t));
    REQUIRE(j.at("value_flows").size() == 2);
    CHECK(j["value_flows"][0]["receiver_entity"] == "rX, Inc");
    CHECK(j["value_flows"][1]["sender_entity"] == "a\"b");
}

TEST_CASE("load_results reads a results directory")
{
    testkit::temp_dir dir;
    CHECK_THROWS_AS(tables::load_results(dir / "absent"), missing_result);
    CHECK_THROWS_AS(tables::load_results(dir.path()), missing_result);
    const auto results = sample_results();
    for (const auto &r : results)
        testkit::write_text(dir / (std::string { chain_token(r.chain) } + "-" + r.name + ".json"), pipeline::result_to_json(r));
    testkit::write_text(dir / "manifest.json", "{}");
    const auto loaded = tables::load_results(dir.path());
    CHECK(loaded.size() == results.size());
    CHECK(tables::build_tables(loaded) == tables::build_tables(results));
}
