#include "json_util.hpp"

#include <chainscope/adapters/adapter.hpp>

#include <array>
#include <unordered_map>

namespace chainscope::adapters::tezos {
    using namespace detail;

    namespace {
        const decimal mutez_per_tez { 1000000 };

        void check_schema(const json_value &doc)
        {
            if (member(doc, "block_num") != nullptr || member(doc, "ledger") != nullptr || member(doc, "result") != nullptr)
                throw chain_mismatch("Tezos: document is not a block RPC response");
        }

        bool is_consensus_kind(std::string_view kind)
        {
            return kind == "endorsement" || kind == "endorsement_with_slot";
        }

        // Field holding the acting account for a content kind; "metadata.delegate" is read from metadata.
        std::string_view sender_key(std::string_view kind)
        {
            if (is_consensus_kind(kind))
                return "metadata.delegate";
            if (kind == "activate_account")
                return "pkh";
            return "source";
        }

        std::string_view receiver_key(std::string_view kind)
        {
            if (kind == "transaction")
                return "destination";
            if (kind == "delegation")
                return "delegate";
            return {};
        }

        // validation pass that holds each operation: 0 consensus, 1 voting, 2 anonymous, 3 manager
        size_t validation_pass(std::string_view kind)
        {
            if (is_consensus_kind(kind))
                return 0;
            if (kind == "ballot" || kind == "proposals")
                return 1;
            if (kind == "seed_nonce_revelation" || kind == "double_baking_evidence" || kind == "double_endorsement_evidence"
                    || kind == "activate_account")
                return 2;
            return 3;
        }

        bool is_status_word(std::string_view s)
        {
            return s == "failed" || s == "backtracked" || s == "skipped";
        }

        void parse_content(const json_value &raw, const std::string &op_hash, const parse_options &opts, block &out)
        {
            const auto kind = string_member(raw, "kind");
            if (!kind || kind->empty())
                throw malformed_block("Tezos: operation content without kind at level " + std::to_string(out.height));
            action a;
            a.chain = chain_id::tezos;
            a.tx_id = op_hash;
            a.name = *kind;
            const auto *metadata = member(raw, "metadata");
            const auto skey = sender_key(*kind);
            if (skey == "metadata.delegate") {
                if (metadata != nullptr)
                    a.sender = string_member(*metadata, "delegate").value_or("");
            } else {
                a.sender = string_member(raw, skey.data()).value_or("");
            }
            const auto rkey = receiver_key(*kind);
            if (!rkey.empty())
                a.receiver = string_member(raw, rkey.data()).value_or("");
            if (opts.parse_amounts) {
                if (auto amt = string_member(raw, "amount")) {
                    decimal mutez;
                    if (decimal::try_parse(*amt, mutez)) {
                        a.amount = mutez / mutez_per_tez;
                        a.currency = std::string { native_currency(chain_id::tezos) };
                    }
                }
            }
            if (metadata != nullptr) {
                if (const auto *result = member(*metadata, "operation_result")) {
                    const auto status = string_member(*result, "status").value_or("applied");
                    if (status != "applied") {
                        a.success = false;
                        const auto *errors = member(*result, "errors");
                        std::optional<std::string_view> first_error;
                        if (errors != nullptr && errors->IsArray() && !errors->Empty())
                            first_error = string_member((*errors)[0], "id");
                        a.error_code = std::string { first_error.value_or(status) };
                    }
                }
            }
            if (opts.payload == payload_mode::full) {
                for (auto it = raw.MemberBegin(); it != raw.MemberEnd(); ++it) {
                    const auto key = as_view(it->name);
                    if (key == "kind" || key == skey || (!rkey.empty() && key == rkey))
                        continue;
                    if (key == "amount" && opts.parse_amounts && a.amount)
                        continue;
                    a.payload.push_back(to_entry(std::string { key }, it->value));
                }
            }
            out.actions.push_back(std::move(a));
        }

        void write_synthetic_metadata(json_writer &w, const action &a)
        {
            if (is_consensus_kind(a.name)) {
                write_key(w, "metadata");
                w.StartObject();
                write_key(w, "delegate");
                write_string(w, a.sender);
                w.EndObject();
                return;
            }
            if (validation_pass(a.name) != 3)
                return;
            write_key(w, "metadata");
            w.StartObject();
            write_key(w, "operation_result");
            w.StartObject();
            write_key(w, "status");
            if (a.success) {
                write_string(w, "applied");
            } else {
                const std::string code = a.error_code.value_or("failed");
                if (is_status_word(code)) {
                    write_string(w, code);
                } else {
                    write_string(w, "failed");
                    write_key(w, "errors");
                    w.StartArray();
                    w.StartObject();
                    write_key(w, "id");
                    write_string(w, code);
                    w.EndObject();
                    w.EndArray();
                }
            }
            w.EndObject();
            w.EndObject();
        }
    }

    std::uint64_t probe_height(std::string_view raw_line)
    {
        rapidjson::Document doc;
        parse_document(doc, raw_line, "Tezos");
        check_schema(doc);
        const auto *header = member(doc, "header");
        const auto h = header != nullptr ? uint_member(*header, "level") : std::nullopt;
        if (!h)
            throw malformed_block("Tezos: missing header.level");
        return *h;
    }

    block parse(std::string_view raw_line, const parse_options &opts)
    {
        rapidjson::Document doc;
        parse_document(doc, raw_line, "Tezos");
        check_schema(doc);
        block b;
        b.chain = chain_id::tezos;
        const auto *header = member(doc, "header");
        const auto *ops = member(doc, "operations");
        if (header == nullptr || ops == nullptr || !ops->IsArray())
            throw malformed_block("Tezos: block document lacks header/operations");
        const auto h = uint_member(*header, "level");
        const auto ts = string_member(*header, "timestamp");
        if (!h || !ts)
            throw malformed_block("Tezos: header lacks level/timestamp");
        b.height = *h;
        if (!try_parse_utc(*ts, b.time))
            throw malformed_block("Tezos: invalid timestamp '" + std::string { *ts } + "'");
        for (const auto &pass : ops->GetArray()) {
            if (!pass.IsArray())
                throw malformed_block("Tezos: operations entry is not a list at level " + std::to_string(b.height));
            for (const auto &op : pass.GetArray()) {
                ++b.tx_count;
                const std::string hash { string_member(op, "hash").value_or("") };
                const auto *contents = member(op, "contents");
                if (contents == nullptr || !contents->IsArray())
                    continue;
                for (const auto &c : contents->GetArray())
                    parse_content(c, hash, opts, b);
            }
        }
        return b;
    }

    std::string render(const block &b)
    {
        std::vector<std::vector<const action *>> groups;
        std::unordered_map<std::string_view, size_t> index;
        for (const auto &a : b.actions) {
            auto [it, created] = index.try_emplace(a.tx_id, groups.size());
            if (created)
                groups.emplace_back();
            groups[it->second].push_back(&a);
        }
        std::array<std::vector<size_t>, 4> passes;
        for (size_t i = 0; i < groups.size(); ++i)
            passes[validation_pass(groups[i].front()->name)].push_back(i);

        rapidjson::StringBuffer buf;
        json_writer w { buf };
        w.StartObject();
        write_key(w, "header");
        w.StartObject();
        write_key(w, "level");
        w.Uint64(b.height);
        write_key(w, "timestamp");
        write_string(w, format_utc(b.time));
        w.EndObject();
        write_key(w, "operations");
        w.StartArray();
        for (size_t p = 0; p < passes.size(); ++p) {
            w.StartArray();
            for (const auto gi : passes[p]) {
                const auto &g = groups[gi];
                w.StartObject();
                write_key(w, "hash");
                write_string(w, g.front()->tx_id);
                write_key(w, "contents");
                w.StartArray();
                for (const auto *a : g) {
                    w.StartObject();
                    write_key(w, "kind");
                    write_string(w, a->name);
                    const auto skey = sender_key(a->name);
                    if (skey != "metadata.delegate" && !a->sender.empty()) {
                        write_key(w, skey);
                        write_string(w, a->sender);
                    }
                    const auto rkey = receiver_key(a->name);
                    if (!rkey.empty() && !a->receiver.empty()) {
                        write_key(w, rkey);
                        write_string(w, a->receiver);
                    }
                    if (a->amount && find_payload(a->payload, "amount") == nullptr) {
                        write_key(w, "amount");
                        write_string(w, (*a->amount * mutez_per_tez).to_string());
                    }
                    for (const auto &e : a->payload) {
                        write_key(w, e.key);
                        write_value(w, e);
                    }
                    if (find_payload(a->payload, "metadata") == nullptr)
                        write_synthetic_metadata(w, *a);
                    w.EndObject();
                }
                w.EndArray();
                w.EndObject();
            }
            if (p == passes.size() - 1) {
                for (auto i = groups.size(); i < b.tx_count; ++i) {
                    w.StartObject();
                    write_key(w, "hash");
                    write_string(w, "op-" + std::to_string(i));
                    write_key(w, "contents");
                    w.StartArray();
                    w.EndArray();
                    w.EndObject();
                }
            }
            w.EndArray();
        }
        w.EndArray();
        w.EndObject();
        return { buf.GetString(), buf.GetSize() };
    }
}
