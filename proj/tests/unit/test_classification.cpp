#include <doctest.h>

#include "testkit.hpp"

#include <chainscope/classification.hpp>
#include <chainscope/error.hpp>
#include <chainscope/pipeline.hpp>

#include <random>

using namespace chainscope;

namespace {
    action make(chain_id chain, std::string receiver, std::string name)
    {
        action a;
        a.chain = chain;
        a.receiver = std::move(receiver);
        a.name = std::move(name);
        return a;
    }
}

TEST_CASE("documented examples")
{
    CHECK(classify_action(default_rules(chain_id::xrpl), make(chain_id::xrpl, "", "OfferCreate")) == action_category::dex);
    CHECK(classify_action(default_rules(chain_id::tezos), make(chain_id::tezos, "", "endorsement")) == action_category::consensus);
    CHECK(classify_action(default_rules(chain_id::eosio), make(chain_id::eosio, "pptqipaelyog", "m")) == action_category::other);
    CHECK(classify_action(default_rules(chain_id::eosio), make(chain_id::eosio, "eosio.token", "transfer")) == action_category::token);
    CHECK(classify_action(default_rules(chain_id::eosio), make(chain_id::eosio, "betdicetasks", "removetask")) == action_category::gambling);
    CHECK(classify_action(default_rules(chain_id::eosio), make(chain_id::eosio, "whaleextrust", "verifytrade2")) == action_category::dex);
    CHECK(classify_action(default_rules(chain_id::xrpl), make(chain_id::xrpl, "", "Payment")) == action_category::peer_to_peer);
}

TEST_CASE("lookup order: exact rule, wildcard, contract label, fallback")
{
    classification_rules r;
    r.chain = chain_id::eosio;
    r.add_rule("special", "act", action_category::dex);
    r.add_rule("*", "act", action_category::token);
    r.add_label("special", action_category::gambling);
    r.fallback = action_category::account;
    CHECK(classify_action(r, make(chain_id::eosio, "special", "act")) == action_category::dex);
    CHECK(classify_action(r, make(chain_id::eosio, "other", "act")) == action_category::token);
    CHECK(classify_action(r, make(chain_id::eosio, "special", "x")) == action_category::gambling);
    CHECK(classify_action(r, make(chain_id::eosio, "other", "x")) == action_category::account);
}

TEST_CASE("classifying another chain's action is a chain mismatch")
{
    CHECK_THROWS_AS(classify_action(default_rules(chain_id::eosio), make(chain_id::xrpl, "", "Payment")), chain_mismatch);
}

TEST_CASE("property: classification is total over arbitrary names")
{
    std::mt19937_64 rng { 11 };
    std::uniform_int_distribution<int> len { 0, 24 };
    std::uniform_int_distribution<int> byte { 1, 255 };
    for (const auto chain : { chain_id::eosio, chain_id::tezos, chain_id::xrpl }) {
        const auto rules = default_rules(chain);
        for (int i = 0; i < 2000; ++i) {
            std::string name, receiver;
            for (int k = len(rng); k > 0; --k)
                name.push_back(static_cast<char>(byte(rng)));
            for (int k = len(rng); k > 0; --k)
                receiver.push_back(static_cast<char>(byte(rng)));
            const auto c = classify_action(rules, make(chain, receiver, name));
            CHECK(parse_category(category_name(c)) == c);
        }
    }
}

TEST_CASE("rules survive a JSON round trip")
{
    for (const auto chain : { chain_id::eosio, chain_id::tezos, chain_id::xrpl }) {
        const auto r = default_rules(chain);
        CHECK(parse_rules(rules_to_json(r)) == r);
    }
}

TEST_CASE("shipped rule files equal the built-in rules")
{
    const std::filesystem::path dir = std::filesystem::path { CHAINSCOPE_SOURCE_DIR } / "data" / "rules";
    for (const auto chain : { chain_id::eosio, chain_id::tezos, chain_id::xrpl }) {
        const auto file = dir / (std::string { chain_token(chain) } + ".json");
        CAPTURE(file.string());
        CHECK(load_rules(file) == default_rules(chain));
    }
}

TEST_CASE("rule documents are validated")
{
    CHECK_THROWS_AS(parse_rules("{"), config_error);
    CHECK_THROWS_AS(parse_rules(R"({"rules": []})"), config_error);
    CHECK_THROWS_AS(parse_rules(R"({"chain": "btc"})"), config_error);
    CHECK_THROWS_AS(parse_rules(R"({"chain": "eos", "rules": [{"name": "x", "category": "SPAM"}]})"), config_error);
    CHECK_THROWS_AS(parse_rules(R"({"chain": "eos", "labels": {"a": 3}})"), config_error);
    const auto r = parse_rules(R"({"chain": "xrp", "default": "DEX", "rules": [{"name": "Payment", "category": "TOKEN"}]})");
    CHECK(r.fallback == action_category::dex);
    CHECK(classify_action(r, make(chain_id::xrpl, "rX", "Payment")) == action_category::token);
    CHECK_THROWS_AS(load_rules("/nonexistent/rules.json"), config_error);
}

TEST_CASE("golden: every action of the published distribution table lands in its group")
{
    for (const auto &row : testkit::distribution_table()) {
        const auto rules = default_rules(row.chain);
        const auto c = classify_action(rules, make(row.chain, row.receiver, row.name));
        CAPTURE(row.name);
        CHECK(testkit::group_of(c) == row.group);
    }
}

TEST_CASE("published counts reproduce the bold percentages")
{
    std::map<chain_id, std::map<std::pair<action_category, std::string>, std::uint64_t>> counts;
    for (const auto &row : testkit::distribution_table()) {
        const auto c = classify_action(default_rules(row.chain), make(row.chain, row.receiver, row.name));
        counts[row.chain][{ c, row.name }] += row.count;
    }
    auto percent_of = [&](chain_id chain, std::string_view name) {
        for (const auto &r : pipeline::apportion(counts[chain])) {
            if (r.name == name)
                return pipeline::format_permille(r.permille);
        }
        return std::string {};
    };
    CHECK(percent_of(chain_id::eosio, "transfer") == "96.2");
    CHECK(percent_of(chain_id::tezos, "endorsement") == "76.6");
    CHECK(percent_of(chain_id::xrpl, "OfferCreate") == "59.1");
    CHECK(percent_of(chain_id::xrpl, "Payment") == "36.9");
    for (const auto &[chain, c] : counts) {
        std::uint64_t total = 0;
        for (const auto &r : pipeline::apportion(c))
            total += r.permille;
        CHECK(total == 1000);
    }
}
