#include <doctest.h>

#include <chainscope/error.hpp>
#include <chainscope/model.hpp>

using namespace chainscope;

TEST_CASE("chain tokens and names round-trip")
{
    for (const auto c : { chain_id::eosio, chain_id::tezos, chain_id::xrpl }) {
        CHECK(parse_chain(chain_token(c)) == c);
        CHECK(parse_chain(chain_name(c)) == c);
    }
    CHECK(parse_chain("EOS") == chain_id::eosio);
    CHECK(parse_chain("xrpl") == chain_id::xrpl);
    CHECK_FALSE(parse_chain("bitcoin").has_value());
    CHECK(native_currency(chain_id::xrpl) == "XRP");
    CHECK(native_currency(chain_id::tezos) == "XTZ");
    CHECK(native_currency(chain_id::eosio) == "EOS");
}

TEST_CASE("categories round-trip")
{
    for (const auto c : all_categories)
        CHECK(parse_category(category_name(c)) == c);
    CHECK(parse_category("dex") == action_category::dex);
    CHECK_FALSE(parse_category("SPAM").has_value());
}

TEST_CASE("throughput counts transactions, not actions")
{
    block b;
    b.tx_count = 2;
    b.actions.resize(5);
    for (auto &a : b.actions)
        a.name = "transfer";
    CHECK(throughput_count(b) == 2);
}

TEST_CASE("validate rejects broken invariants")
{
    block b;
    b.chain = chain_id::xrpl;
    action a;
    a.chain = chain_id::xrpl;
    a.name = "Payment";
    b.actions.push_back(a);
    CHECK_NOTHROW(validate(b));

    SUBCASE("foreign action")
    {
        b.actions[0].chain = chain_id::tezos;
        CHECK_THROWS_AS(validate(b), malformed_block);
    }
    SUBCASE("empty name")
    {
        b.actions[0].name.clear();
        CHECK_THROWS_AS(validate(b), malformed_block);
    }
    SUBCASE("success with an error code")
    {
        b.actions[0].error_code = "tecPATH_DRY";
        CHECK_THROWS_AS(validate(b), malformed_block);
    }
    SUBCASE("native currency with issuer")
    {
        b.actions[0].currency = "XRP";
        b.actions[0].issuer = "rIssuer";
        CHECK_THROWS_AS(validate(b), malformed_block);
    }
}

TEST_CASE("find_payload")
{
    payload_map p { { "a", "1", false }, { "b", "{}", true } };
    REQUIRE(find_payload(p, "b") != nullptr);
    CHECK(find_payload(p, "b")->raw_json);
    CHECK(find_payload(p, "c") == nullptr);
}
