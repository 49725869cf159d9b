#include <chainscope/error.hpp>
#include <chainscope/model.hpp>

#include <algorithm>
#include <cctype>

namespace chainscope {
    namespace {
        bool iequals(std::string_view a, std::string_view b) noexcept
        {
            return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
            });
        }
    }

    std::string_view chain_token(chain_id c) noexcept
    {
        switch (c) {
            case chain_id::eosio: return "eos";
            case chain_id::tezos: return "tezos";
            case chain_id::xrpl: return "xrp";
        }
        return "unknown";
    }

    std::string_view chain_name(chain_id c) noexcept
    {
        switch (c) {
            case chain_id::eosio: return "EOSIO";
            case chain_id::tezos: return "Tezos";
            case chain_id::xrpl: return "XRPL";
        }
        return "unknown";
    }

    std::optional<chain_id> parse_chain(std::string_view text) noexcept
    {
        for (const auto c : { chain_id::eosio, chain_id::tezos, chain_id::xrpl }) {
            if (iequals(text, chain_token(c)) || iequals(text, chain_name(c)))
                return c;
        }
        if (iequals(text, "xtz"))
            return chain_id::tezos;
        if (iequals(text, "xrpl") || iequals(text, "ripple"))
            return chain_id::xrpl;
        if (iequals(text, "eosio"))
            return chain_id::eosio;
        return std::nullopt;
    }

    std::string_view native_currency(chain_id c) noexcept
    {
        switch (c) {
            case chain_id::eosio: return "EOS";
            case chain_id::tezos: return "XTZ";
            case chain_id::xrpl: return "XRP";
        }
        return "";
    }

    std::string_view category_name(action_category c) noexcept
    {
        switch (c) {
            case action_category::peer_to_peer: return "PEER_TO_PEER";
            case action_category::account: return "ACCOUNT";
            case action_category::consensus: return "CONSENSUS";
            case action_category::dex: return "DEX";
            case action_category::gambling: return "GAMBLING";
            case action_category::token: return "TOKEN";
            case action_category::other: return "OTHER";
        }
        return "OTHER";
    }

    std::optional<action_category> parse_category(std::string_view text) noexcept
    {
        for (const auto c : all_categories) {
            if (iequals(text, category_name(c)))
                return c;
        }
        return std::nullopt;
    }

    const payload_entry *find_payload(const payload_map &p, std::string_view key) noexcept
    {
        for (const auto &e : p) {
            if (e.key == key)
                return &e;
        }
        return nullptr;
    }

    void validate(const block &b)
    {
        for (const auto &a : b.actions) {
            if (a.chain != b.chain)
                throw malformed_block("action chain differs from block chain at height " + std::to_string(b.height));
            if (a.name.empty())
                throw malformed_block("action with empty name at height " + std::to_string(b.height));
            if (a.success && a.error_code)
                throw malformed_block("successful action carries an error code at height " + std::to_string(b.height));
            if (a.issuer && (!a.currency || *a.currency == native_currency(a.chain)) && a.chain != chain_id::eosio)
                throw malformed_block("native currency with an issuer at height " + std::to_string(b.height));
        }
    }
}
