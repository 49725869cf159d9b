#include "json_util.hpp"

#include <chainscope/adapters/adapter.hpp>

#include <unordered_map>

namespace chainscope::adapters::eosio {
    using namespace detail;

    namespace {
        constexpr std::string_view token_contract = "eosio.token";

        void check_schema(const json_value &doc)
        {
            if (member(doc, "ledger") != nullptr || member(doc, "result") != nullptr
                    || (member(doc, "header") != nullptr && member(doc, "operations") != nullptr))
                throw chain_mismatch("EOSIO: document is not a get_block response");
        }

        // "1.0000 EOS" -> (1.0000, EOS)
        bool parse_asset(std::string_view text, decimal &amount, std::string &symbol)
        {
            const auto space = text.find(' ');
            if (space == std::string_view::npos || space == 0 || space + 1 >= text.size())
                return false;
            if (!decimal::try_parse(text.substr(0, space), amount))
                return false;
            symbol.assign(text.substr(space + 1));
            return true;
        }

        std::string format_asset(const decimal &amount, std::string_view symbol)
        {
            return amount.to_string() + " " + std::string { symbol };
        }

        void parse_action(const json_value &raw, const std::string &tx_id, bool success, const std::string &status,
            const parse_options &opts, block &out)
        {
            auto account = string_member(raw, "account");
            auto name = string_member(raw, "name");
            if (!account || !name || name->empty())
                throw malformed_block("EOSIO: action without account/name at block " + std::to_string(out.height));
            action a;
            a.chain = chain_id::eosio;
            a.tx_id = tx_id;
            a.receiver = *account;
            a.name = *name;
            a.success = success;
            if (!success)
                a.error_code = status;
            if (const auto *auth = member(raw, "authorization"); auth != nullptr && auth->IsArray() && !auth->Empty()) {
                if (auto actor = string_member((*auth)[0], "actor"))
                    a.sender = *actor;
            }
            const auto *data = member(raw, "data");
            if (opts.parse_amounts && data != nullptr && a.name == "transfer") {
                if (auto qty = string_member(*data, "quantity")) {
                    decimal amount;
                    std::string symbol;
                    if (parse_asset(*qty, amount, symbol)) {
                        a.amount = amount;
                        if (a.receiver != token_contract || symbol != native_currency(chain_id::eosio))
                            a.issuer = a.receiver;
                        a.currency = std::move(symbol);
                    }
                }
            }
            if (opts.payload != payload_mode::none) {
                for (auto it = raw.MemberBegin(); it != raw.MemberEnd(); ++it) {
                    const auto key = as_view(it->name);
                    if (key == "account" || key == "name")
                        continue;
                    if (key == "data") {
                        if (it->value.IsObject()) {
                            for (auto d = it->value.MemberBegin(); d != it->value.MemberEnd(); ++d)
                                a.payload.push_back(to_entry("data." + std::string { as_view(d->name) }, d->value));
                        } else {
                            a.payload.push_back(to_entry("data", it->value));
                        }
                        continue;
                    }
                    if (opts.payload == payload_mode::full)
                        a.payload.push_back(to_entry(std::string { key }, it->value));
                }
            }
            out.actions.push_back(std::move(a));
        }
    }

    std::uint64_t probe_height(std::string_view raw_line)
    {
        rapidjson::Document doc;
        parse_document(doc, raw_line, "EOSIO");
        check_schema(doc);
        const auto h = uint_member(doc, "block_num");
        if (!h)
            throw malformed_block("EOSIO: missing block_num");
        return *h;
    }

    block parse(std::string_view raw_line, const parse_options &opts)
    {
        rapidjson::Document doc;
        parse_document(doc, raw_line, "EOSIO");
        check_schema(doc);
        block b;
        b.chain = chain_id::eosio;
        const auto h = uint_member(doc, "block_num");
        const auto ts = string_member(doc, "timestamp");
        const auto *txs = member(doc, "transactions");
        if (!h || !ts || txs == nullptr || !txs->IsArray())
            throw malformed_block("EOSIO: block document lacks block_num/timestamp/transactions");
        b.height = *h;
        if (!try_parse_utc(*ts, b.time))
            throw malformed_block("EOSIO: invalid timestamp '" + std::string { *ts } + "'");
        for (const auto &tx : txs->GetArray()) {
            ++b.tx_count;
            const auto *trx = member(tx, "trx");
            if (trx == nullptr || !trx->IsObject())
                continue; // deferred transaction referenced by id only; no actions listed
            const std::string status { string_member(tx, "status").value_or("executed") };
            const std::string tx_id { string_member(*trx, "id").value_or("") };
            const auto *body = member(*trx, "transaction");
            const auto *actions = body != nullptr ? member(*body, "actions") : nullptr;
            if (actions == nullptr || !actions->IsArray())
                continue;
            const bool success = status == "executed";
            for (const auto &act : actions->GetArray())
                parse_action(act, tx_id, success, status, opts, b);
        }
        return b;
    }

    std::string render(const block &b)
    {
        rapidjson::StringBuffer buf;
        json_writer w { buf };
        w.StartObject();
        write_key(w, "timestamp");
        auto ts = format_utc(b.time);
        ts.back() = '.';
        ts += "000";
        write_string(w, ts);
        write_key(w, "block_num");
        w.Uint64(b.height);
        write_key(w, "transactions");
        w.StartArray();

        // group actions by transaction, preserving first appearance
        std::vector<std::vector<const action *>> groups;
        std::unordered_map<std::string_view, size_t> index;
        for (const auto &a : b.actions) {
            auto [it, created] = index.try_emplace(a.tx_id, groups.size());
            if (created)
                groups.emplace_back();
            groups[it->second].push_back(&a);
        }
        for (const auto &g : groups) {
            const action &first = *g.front();
            w.StartObject();
            write_key(w, "status");
            write_string(w, first.success ? "executed" : first.error_code.value_or("hard_fail"));
            write_key(w, "trx");
            w.StartObject();
            write_key(w, "id");
            write_string(w, first.tx_id);
            write_key(w, "transaction");
            w.StartObject();
            write_key(w, "actions");
            w.StartArray();
            for (const auto *a : g) {
                w.StartObject();
                write_key(w, "account");
                write_string(w, a->receiver);
                write_key(w, "name");
                write_string(w, a->name);
                const auto *auth = find_payload(a->payload, "authorization");
                if (auth == nullptr) {
                    write_key(w, "authorization");
                    w.StartArray();
                    if (!a->sender.empty()) {
                        w.StartObject();
                        write_key(w, "actor");
                        write_string(w, a->sender);
                        write_key(w, "permission");
                        write_string(w, "active");
                        w.EndObject();
                    }
                    w.EndArray();
                }
                bool data_written = false;
                for (const auto &e : a->payload) {
                    if (starts_with(e.key, "data.")) {
                        if (!data_written) {
                            write_key(w, "data");
                            w.StartObject();
                            data_written = true;
                            for (const auto &d : a->payload) {
                                if (!starts_with(d.key, "data."))
                                    continue;
                                write_key(w, std::string_view { d.key }.substr(5));
                                write_value(w, d);
                            }
                            w.EndObject();
                        }
                        continue;
                    }
                    write_key(w, e.key);
                    write_value(w, e);
                    if (e.key == "data")
                        data_written = true;
                }
                if (!data_written && a->amount && a->currency) {
                    write_key(w, "data");
                    w.StartObject();
                    write_key(w, "quantity");
                    write_string(w, format_asset(*a->amount, *a->currency));
                    w.EndObject();
                }
                w.EndObject();
            }
            w.EndArray();
            w.EndObject();
            w.EndObject();
            w.EndObject();
        }
        for (auto i = groups.size(); i < b.tx_count; ++i) {
            w.StartObject();
            write_key(w, "status");
            write_string(w, "executed");
            write_key(w, "trx");
            write_string(w, "deferred-" + std::to_string(i));
            w.EndObject();
        }
        w.EndArray();
        w.EndObject();
        return { buf.GetString(), buf.GetSize() };
    }
}
