#include <doctest.h>

#include "testkit.hpp"

#include <chainscope/adapters/adapter.hpp>
#include <chainscope/error.hpp>

using namespace chainscope;
using adapters::parse_options;
using adapters::payload_mode;

namespace {
    const std::string eos_block = R"({"timestamp":"2019-10-01T00:00:00.500","producer":"eoshuobipool","block_num":82152667,)"
        R"("transactions":[)"
        R"({"status":"executed","cpu_usage_us":300,"trx":{"id":"aa01","transaction":{"expiration":"2019-10-01T00:01:00","actions":[)"
        R"({"account":"eosio.token","name":"transfer","authorization":[{"actor":"alice","permission":"active"}],)"
        R"("data":{"from":"alice","to":"bob","quantity":"1.2500 EOS","memo":"hi"}},)"
        R"({"account":"betdicetasks","name":"removetask","authorization":[{"actor":"betdicegroup","permission":"active"}],"data":{"id":7}}]}}},)"
        R"({"status":"hard_fail","trx":{"id":"aa02","transaction":{"actions":[)"
        R"({"account":"pptqipaelyog","name":"m","authorization":[],"data":"00ff"}]}}},)"
        R"({"status":"executed","trx":"deferredid01"}]})";

    const std::string tezos_block = R"({"protocol":"PsBabyM1","chain_id":"NetXdQprcVkpaWU",)"
        R"("header":{"level":630709,"proto":5,"timestamp":"2019-10-01T00:00:30Z"},)"
        R"("operations":[)"
        R"([{"hash":"opE1","contents":[{"kind":"endorsement","level":630708,"metadata":{"delegate":"tz1baker","slots":[1,2]}}]}],)"
        R"([],[],)"
        R"([{"hash":"opT1","contents":[)"
        R"({"kind":"reveal","source":"tz1new","fee":"1269","public_key":"edpk","metadata":{"operation_result":{"status":"applied"}}},)"
        R"({"kind":"transaction","source":"tz1new","destination":"tz1dest","amount":"2500000",)"
        R"("metadata":{"operation_result":{"status":"failed","errors":[{"kind":"temporary","id":"proto.005-PsBabyM1.contract.balance_too_low"}]}}}]}]]})";

    const std::string xrpl_ledger = R"({"id":50399027,"status":"success","type":"response","result":{"ledger":{)"
        R"("ledger_index":"50399027","close_time":623203200,"closed":true,"transactions":[)"
        R"({"Account":"rSender","Destination":"rDest","DestinationTag":12,"TransactionType":"Payment","Flags":131072,)"
        R"("Amount":{"currency":"USD","issuer":"rIssuer","value":"10.5"},"hash":"H1",)"
        R"("metaData":{"TransactionResult":"tesSUCCESS","delivered_amount":{"currency":"USD","issuer":"rIssuer","value":"0.5"}}},)"
        R"({"Account":"rMaker","TransactionType":"OfferCreate","hash":"H2","TakerGets":"1000","TakerPays":{"currency":"BTC","issuer":"rI","value":"1"},)"
        R"("metaData":{"TransactionResult":"tecUNFUNDED_OFFER"}},)"
        R"({"Account":"rA","Destination":"rB","TransactionType":"Payment","Amount":"2000000","hash":"H3","metaData":{"TransactionResult":"tecPATH_DRY"}}]},)"
        R"("ledger_index":50399027,"validated":true}})";
}

TEST_CASE("EOSIO get_block mapping")
{
    const auto b = adapters::parse_block(chain_id::eosio, eos_block);
    CHECK(b.height == 82152667);
    CHECK(format_utc(b.time) == "2019-10-01T00:00:00Z");
    // two listed transactions plus a deferred one referenced by id
    CHECK(b.tx_count == 3);
    REQUIRE(b.actions.size() == 3);
    const auto &t = b.actions[0];
    CHECK(t.tx_id == "aa01");
    CHECK(t.sender == "alice");
    CHECK(t.receiver == "eosio.token");
    CHECK(t.name == "transfer");
    CHECK(t.success);
    CHECK(t.amount == decimal::parse("1.25"));
    CHECK(t.currency == "EOS");
    CHECK_FALSE(t.issuer.has_value());
    REQUIRE(find_payload(t.payload, "data.to") != nullptr);
    CHECK(find_payload(t.payload, "data.to")->value == "bob");
    CHECK(b.actions[1].sender == "betdicegroup");
    const auto &failed = b.actions[2];
    CHECK_FALSE(failed.success);
    CHECK(failed.error_code == "hard_fail");
    CHECK(failed.sender.empty());
    CHECK(adapters::probe_height(chain_id::eosio, eos_block) == 82152667);
}

TEST_CASE("Tezos block RPC mapping")
{
    const auto b = adapters::parse_block(chain_id::tezos, tezos_block);
    CHECK(b.height == 630709);
    CHECK(b.tx_count == 2);
    REQUIRE(b.actions.size() == 3);
    CHECK(b.actions[0].name == "endorsement");
    CHECK(b.actions[0].sender == "tz1baker");
    CHECK(b.actions[0].receiver.empty());
    CHECK(b.actions[1].name == "reveal");
    CHECK(b.actions[1].success);
    const auto &tx = b.actions[2];
    CHECK(tx.sender == "tz1new");
    CHECK(tx.receiver == "tz1dest");
    CHECK(tx.amount == decimal::parse("2.5"));
    CHECK(tx.currency == "XTZ");
    CHECK_FALSE(tx.success);
    CHECK(tx.error_code == "proto.005-PsBabyM1.contract.balance_too_low");
}

TEST_CASE("XRPL websocket ledger mapping")
{
    const auto b = adapters::parse_block(chain_id::xrpl, xrpl_ledger);
    CHECK(b.height == 50399027);
    CHECK(epoch_seconds(b.time) == 623203200 + ripple_epoch_offset);
    CHECK(b.tx_count == 3);
    REQUIRE(b.actions.size() == 3);
    const auto &p = b.actions[0];
    CHECK(p.sender == "rSender");
    CHECK(p.receiver == "rDest");
    CHECK(p.destination_tag == 12u);
    CHECK(p.amount == decimal::parse("10.5"));
    CHECK(p.currency == "USD");
    CHECK(p.issuer == "rIssuer");
    CHECK(p.success);
    CHECK(b.actions[1].receiver.empty());
    CHECK(b.actions[1].error_code == "tecUNFUNDED_OFFER");
    CHECK(b.actions[2].amount == decimal { 2 });
    CHECK(b.actions[2].currency == "XRP");
    CHECK(b.actions[2].error_code == "tecPATH_DRY");

    const auto d = adapters::parse_block(chain_id::xrpl, xrpl_ledger, { payload_mode::detector, true });
    CHECK(find_payload(d.actions[0].payload, "Flags") != nullptr);
    CHECK(find_payload(d.actions[0].payload, "meta.delivered_amount") != nullptr);
    CHECK(find_payload(d.actions[0].payload, "TakerGets") == nullptr);
    const auto n = adapters::parse_block(chain_id::xrpl, xrpl_ledger, { payload_mode::none, false });
    CHECK(n.actions[0].payload.empty());
    CHECK_FALSE(n.actions[0].amount.has_value());
}

TEST_CASE("documents of another chain are a chain mismatch")
{
    CHECK_THROWS_AS(adapters::parse_block(chain_id::xrpl, eos_block), chain_mismatch);
    CHECK_THROWS_AS(adapters::parse_block(chain_id::eosio, xrpl_ledger), chain_mismatch);
    CHECK_THROWS_AS(adapters::parse_block(chain_id::tezos, eos_block), chain_mismatch);
    CHECK_THROWS_AS(adapters::parse_block(chain_id::eosio, tezos_block), chain_mismatch);
}

TEST_CASE("malformed documents")
{
    for (const auto chain : { chain_id::eosio, chain_id::tezos, chain_id::xrpl }) {
        CHECK_THROWS_AS(adapters::parse_block(chain, "{"), malformed_block);
        CHECK_THROWS_AS(adapters::parse_block(chain, "[]"), malformed_block);
        CHECK_THROWS_AS(adapters::parse_block(chain, "{}"), malformed_block);
        CHECK_THROWS_AS(adapters::probe_height(chain, "not json"), malformed_block);
    }
    CHECK_THROWS_AS(adapters::parse_block(chain_id::eosio, R"({"block_num":1,"timestamp":"bad","transactions":[]})"), malformed_block);
    CHECK_THROWS_AS(adapters::parse_block(chain_id::eosio,
                        R"({"block_num":1,"timestamp":"2019-10-01T00:00:00","transactions":[{"trx":{"id":"x","transaction":{"actions":[{"name":"a"}]}}}]})"),
        malformed_block);
}

TEST_CASE("unknown fields are preserved in full payload mode and ignored otherwise")
{
    const auto full = adapters::parse_block(chain_id::eosio, eos_block);
    CHECK(find_payload(full.actions[0].payload, "authorization") != nullptr);
    const auto det = adapters::parse_block(chain_id::eosio, eos_block, { payload_mode::detector, true });
    CHECK(find_payload(det.actions[0].payload, "authorization") == nullptr);
    CHECK(find_payload(det.actions[0].payload, "data.memo") != nullptr);
}

TEST_CASE("property: render then parse is the identity on parsed blocks")
{
    for (const auto chain : { chain_id::eosio, chain_id::tezos, chain_id::xrpl }) {
        testkit::synth_options o;
        o.chain = chain;
        o.blocks = 200;
        o.seed = 5;
        const auto blocks = testkit::synth_blocks(o);
        for (const auto &b : blocks) {
            const auto line = adapters::render_block(b);
            CHECK(line.find('\n') == std::string::npos);
            const auto again = adapters::parse_block(chain, line);
            CHECK(again == b);
            CHECK(adapters::probe_height(chain, line) == b.height);
            CHECK_NOTHROW(validate(again));
        }
    }
    for (const auto &doc : { eos_block, tezos_block, xrpl_ledger }) {
        const auto chain = doc == eos_block ? chain_id::eosio : doc == tezos_block ? chain_id::tezos : chain_id::xrpl;
        for (const auto mode : { payload_mode::none, payload_mode::detector, payload_mode::full }) {
            const parse_options opts { mode, true };
            const auto b = adapters::parse_block(chain, doc, opts);
            CHECK(adapters::parse_block(chain, adapters::render_block(b), opts) == b);
        }
    }
}

TEST_CASE("parsing is deterministic")
{
    CHECK(adapters::parse_block(chain_id::xrpl, xrpl_ledger) == adapters::parse_block(chain_id::xrpl, xrpl_ledger));
}
