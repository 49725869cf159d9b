#include <chainscope/adapters/adapter.hpp>
#include <chainscope/error.hpp>

namespace chainscope::adapters {
    block parse_block(chain_id chain, std::string_view raw_line, const parse_options &opts)
    {
        switch (chain) {
            case chain_id::eosio: return eosio::parse(raw_line, opts);
            case chain_id::tezos: return tezos::parse(raw_line, opts);
            case chain_id::xrpl: return xrpl::parse(raw_line, opts);
        }
        throw chain_mismatch("unknown chain");
    }

    std::string render_block(const block &b)
    {
        switch (b.chain) {
            case chain_id::eosio: return eosio::render(b);
            case chain_id::tezos: return tezos::render(b);
            case chain_id::xrpl: return xrpl::render(b);
        }
        throw chain_mismatch("unknown chain");
    }

    std::uint64_t probe_height(chain_id chain, std::string_view raw_line)
    {
        switch (chain) {
            case chain_id::eosio: return eosio::probe_height(raw_line);
            case chain_id::tezos: return tezos::probe_height(raw_line);
            case chain_id::xrpl: return xrpl::probe_height(raw_line);
        }
        throw chain_mismatch("unknown chain");
    }
}
