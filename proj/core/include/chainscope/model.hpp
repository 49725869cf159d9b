#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>
#include <chainscope/decimal.hpp>
#include <chainscope/time.hpp>

namespace chainscope {
    enum class chain_id : std::uint8_t { eosio, tezos, xrpl };

    // Short token used in archive file names and configs: "eos", "tezos", "xrp".
    std::string_view chain_token(chain_id c) noexcept;
    // Display name: "EOSIO", "Tezos", "XRPL".
    std::string_view chain_name(chain_id c) noexcept;
    // Accepts tokens and display names, case-insensitive.
    std::optional<chain_id> parse_chain(std::string_view text) noexcept;
    std::string_view native_currency(chain_id c) noexcept;

    enum class action_category : std::uint8_t { peer_to_peer, account, consensus, dex, gambling, token, other };

    inline constexpr action_category all_categories[] = { action_category::peer_to_peer, action_category::account,
        action_category::consensus, action_category::dex, action_category::gambling, action_category::token,
        action_category::other };

    // "PEER_TO_PEER", "ACCOUNT", ...
    std::string_view category_name(action_category c) noexcept;
    std::optional<action_category> parse_category(std::string_view text) noexcept;

    // One extra field carried through from the raw document. Plain strings keep their text;
    // any other JSON value is kept as compact JSON text with raw_json set.
    struct payload_entry {
        std::string key;
        std::string value;
        bool raw_json = false;

        bool operator==(const payload_entry &) const = default;
    };

    using payload_map = std::vector<payload_entry>;

    const payload_entry *find_payload(const payload_map &p, std::string_view key) noexcept;

    struct action {
        chain_id chain = chain_id::eosio;
        std::string tx_id;
        std::string sender;
        std::string receiver;
        std::string name;
        bool success = true;
        std::optional<std::string> error_code;
        std::optional<decimal> amount;
        std::optional<std::string> currency;
        std::optional<std::string> issuer;
        std::optional<std::uint64_t> destination_tag;
        payload_map payload;

        bool operator==(const action &) const = default;
    };

    struct block {
        chain_id chain = chain_id::eosio;
        std::uint64_t height = 0;
        timestamp time {};
        std::uint64_t tx_count = 0;
        std::vector<action> actions;

        bool operator==(const block &) const = default;
    };

    // A transaction with several actions counts once.
    inline std::uint64_t throughput_count(const block &b) noexcept
    {
        return b.tx_count;
    }

    // Throws malformed_block when an action breaks the model invariants.
    void validate(const block &b);
}
