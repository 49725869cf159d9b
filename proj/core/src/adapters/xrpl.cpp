#include "json_util.hpp"

#include <chainscope/adapters/adapter.hpp>

namespace chainscope::adapters::xrpl {
    using namespace detail;

    namespace {
        const decimal drops_per_xrp { 1000000 };

        // Accepts the raw websocket response, its "result", or the bare ledger object.
        const json_value &locate_ledger(const json_value &doc)
        {
            if (member(doc, "block_num") != nullptr || (member(doc, "header") != nullptr && member(doc, "operations") != nullptr))
                throw chain_mismatch("XRPL: document is not a ledger response");
            const json_value *cur = &doc;
            if (const auto *result = member(*cur, "result"); result != nullptr && result->IsObject())
                cur = result;
            if (const auto *ledger = member(*cur, "ledger"); ledger != nullptr && ledger->IsObject())
                cur = ledger;
            if (member(*cur, "ledger_index") == nullptr)
                throw malformed_block("XRPL: document has no ledger_index");
            return *cur;
        }

        bool parse_amount(const json_value &v, action &a)
        {
            if (v.IsString()) {
                decimal drops;
                if (!decimal::try_parse(as_view(v), drops))
                    return false;
                a.amount = drops / drops_per_xrp;
                a.currency = std::string { native_currency(chain_id::xrpl) };
                return true;
            }
            if (!v.IsObject())
                return false;
            const auto currency = string_member(v, "currency");
            const auto value = string_member(v, "value");
            decimal amount;
            if (!currency || !value || !decimal::try_parse(*value, amount))
                return false;
            a.amount = amount;
            a.currency = std::string { *currency };
            if (auto issuer = string_member(v, "issuer"))
                a.issuer = std::string { *issuer };
            return true;
        }

        void parse_tx(const json_value &raw, const parse_options &opts, block &out)
        {
            const auto type = string_member(raw, "TransactionType");
            if (!type || type->empty())
                throw malformed_block("XRPL: transaction without TransactionType in ledger " + std::to_string(out.height));
            action a;
            a.chain = chain_id::xrpl;
            a.name = *type;
            a.tx_id = string_member(raw, "hash").value_or("");
            a.sender = string_member(raw, "Account").value_or("");
            a.receiver = string_member(raw, "Destination").value_or("");
            if (auto tag = uint_member(raw, "DestinationTag"))
                a.destination_tag = *tag;
            const auto *meta = member(raw, "metaData");
            const char *meta_key = "metaData";
            if (meta == nullptr) {
                meta = member(raw, "meta");
                meta_key = "meta";
            }
            if (meta != nullptr) {
                const auto result = string_member(*meta, "TransactionResult");
                if (result && *result != "tesSUCCESS") {
                    a.success = false;
                    a.error_code = std::string { *result };
                }
            }
            bool amount_mapped = false;
            if (const auto *amt = member(raw, "Amount"); amt != nullptr && opts.parse_amounts)
                amount_mapped = parse_amount(*amt, a);
            for (auto it = raw.MemberBegin(); it != raw.MemberEnd(); ++it) {
                const auto key = as_view(it->name);
                if (key == "TransactionType" || key == "hash" || key == "Account" || key == "Destination")
                    continue;
                if (key == "DestinationTag" && a.destination_tag)
                    continue;
                if (key == "Amount") {
                    if (!amount_mapped && (opts.payload != payload_mode::none || opts.parse_amounts))
                        a.payload.push_back(to_entry("Amount", it->value));
                    continue;
                }
                if (key == meta_key) {
                    if (opts.payload == payload_mode::full) {
                        a.payload.push_back(to_entry(std::string { key }, it->value));
                    } else if (opts.payload == payload_mode::detector) {
                        if (const auto *delivered = member(it->value, "delivered_amount"))
                            a.payload.push_back(to_entry("meta.delivered_amount", *delivered));
                    }
                    continue;
                }
                if (opts.payload == payload_mode::full || (opts.payload == payload_mode::detector && key == "Flags"))
                    a.payload.push_back(to_entry(std::string { key }, it->value));
            }
            out.actions.push_back(std::move(a));
        }
    }

    std::uint64_t probe_height(std::string_view raw_line)
    {
        rapidjson::Document doc;
        parse_document(doc, raw_line, "XRPL");
        const auto &ledger = locate_ledger(doc);
        const auto h = uint_member(ledger, "ledger_index");
        if (!h)
            throw malformed_block("XRPL: invalid ledger_index");
        return *h;
    }

    block parse(std::string_view raw_line, const parse_options &opts)
    {
        rapidjson::Document doc;
        parse_document(doc, raw_line, "XRPL");
        const auto &ledger = locate_ledger(doc);
        block b;
        b.chain = chain_id::xrpl;
        const auto h = uint_member(ledger, "ledger_index");
        const auto close = uint_member(ledger, "close_time");
        if (!h || !close)
            throw malformed_block("XRPL: ledger lacks ledger_index/close_time");
        b.height = *h;
        b.time = from_epoch_seconds(static_cast<std::int64_t>(*close) + ripple_epoch_offset);
        const auto *txs = member(ledger, "transactions");
        if (txs == nullptr)
            return b;
        if (!txs->IsArray())
            throw malformed_block("XRPL: transactions is not a list in ledger " + std::to_string(b.height));
        for (const auto &tx : txs->GetArray()) {
            ++b.tx_count;
            if (tx.IsObject())
                parse_tx(tx, opts, b);
        }
        return b;
    }

    std::string render(const block &b)
    {
        rapidjson::StringBuffer buf;
        json_writer w { buf };
        w.StartObject();
        write_key(w, "result");
        w.StartObject();
        write_key(w, "ledger");
        w.StartObject();
        write_key(w, "ledger_index");
        write_string(w, std::to_string(b.height));
        write_key(w, "close_time");
        w.Int64(epoch_seconds(b.time) - ripple_epoch_offset);
        write_key(w, "transactions");
        w.StartArray();
        for (const auto &a : b.actions) {
            w.StartObject();
            write_key(w, "Account");
            write_string(w, a.sender);
            write_key(w, "TransactionType");
            write_string(w, a.name);
            write_key(w, "hash");
            write_string(w, a.tx_id);
            if (!a.receiver.empty()) {
                write_key(w, "Destination");
                write_string(w, a.receiver);
            }
            if (a.destination_tag) {
                write_key(w, "DestinationTag");
                w.Uint64(*a.destination_tag);
            }
            if (a.amount && a.currency) {
                write_key(w, "Amount");
                if (*a.currency == native_currency(chain_id::xrpl) && !a.issuer) {
                    write_string(w, (*a.amount * drops_per_xrp).to_string());
                } else {
                    w.StartObject();
                    write_key(w, "currency");
                    write_string(w, *a.currency);
                    if (a.issuer) {
                        write_key(w, "issuer");
                        write_string(w, *a.issuer);
                    }
                    write_key(w, "value");
                    write_string(w, a.amount->to_string());
                    w.EndObject();
                }
            }
            bool meta_written = false;
            for (const auto &e : a.payload) {
                if (e.key == "meta.delivered_amount")
                    continue;
                write_key(w, e.key);
                write_value(w, e);
                meta_written = meta_written || e.key == "metaData" || e.key == "meta";
            }
            if (!meta_written) {
                write_key(w, "metaData");
                w.StartObject();
                write_key(w, "TransactionResult");
                write_string(w, a.success ? "tesSUCCESS" : a.error_code.value_or("tefFAILURE"));
                if (const auto *delivered = find_payload(a.payload, "meta.delivered_amount")) {
                    write_key(w, "delivered_amount");
                    write_value(w, *delivered);
                }
                w.EndObject();
            }
            w.EndObject();
        }
        for (auto i = b.actions.size(); i < b.tx_count; ++i)
            write_string(w, "tx-" + std::to_string(i));
        w.EndArray();
        w.EndObject();
        w.EndObject();
        write_key(w, "status");
        write_string(w, "success");
        write_key(w, "type");
        write_string(w, "response");
        w.EndObject();
        return { buf.GetString(), buf.GetSize() };
    }
}
