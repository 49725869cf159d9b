#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <chainscope/model.hpp>

namespace chainscope::adapters {
    // How much of the raw document survives into action payloads.
    enum class payload_mode : std::uint8_t {
        none,      // typed fields only
        detector,  // plus the fields the anomaly detectors read (EOSIO action data, XRPL delivered amount and flags)
        full       // every unmapped field
    };

    struct parse_options {
        payload_mode payload = payload_mode::full;
        bool parse_amounts = true;
    };

    // Normalizes one stored block document (one JSON Lines line) into a block.
    // Throws malformed_block for invalid JSON or missing mandatory fields, and
    // chain_mismatch when the document is recognizably another chain's format.
    block parse_block(chain_id chain, std::string_view raw_line, const parse_options &opts = {});

    // Inverse of parse_block: emits a single-line document in the chain's native format such that
    // parse_block(chain, render_block(b), opts) == b for any b produced by parse_block(..., opts).
    std::string render_block(const block &b);

    // Height of a stored block document without building the block.
    std::uint64_t probe_height(chain_id chain, std::string_view raw_line);

    namespace eosio {
        block parse(std::string_view raw_line, const parse_options &opts);
        std::string render(const block &b);
        std::uint64_t probe_height(std::string_view raw_line);
    }

    namespace tezos {
        block parse(std::string_view raw_line, const parse_options &opts);
        std::string render(const block &b);
        std::uint64_t probe_height(std::string_view raw_line);
    }

    namespace xrpl {
        block parse(std::string_view raw_line, const parse_options &opts);
        std::string render(const block &b);
        std::uint64_t probe_height(std::string_view raw_line);

        inline constexpr std::uint32_t partial_payment_flag = 0x00020000;
    }
}
