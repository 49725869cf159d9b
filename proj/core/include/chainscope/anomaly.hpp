#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>
#include <chainscope/accounts.hpp>
#include <chainscope/decimal.hpp>
#include <chainscope/model.hpp>
#include <chainscope/time.hpp>

namespace chainscope::anomaly {
    enum class verdict : std::uint8_t { clean, flagged };

    struct anomaly_report {
        std::string detector;
        // one account, or an (account, contract) pair
        std::vector<std::string> subject;
        std::map<std::string, decimal> metrics;
        std::vector<std::string> evidence;
        verdict outcome = verdict::clean;

        bool flagged() const noexcept { return outcome == verdict::flagged; }
        bool operator==(const anomaly_report &) const = default;
    };

    inline constexpr std::size_t default_evidence_cap = 10;

    // ---- exchange rates ----

    // (currency, issuer) -> windows of average rate in XRP. Native XRP is always 1.
    class rate_table {
    public:
        void add(std::string currency, std::string issuer, timestamp window_start, decimal rate);
        // Rate of the window containing `at`: latest window start <= at, or the earliest window for
        // earlier dates. nullopt when the pair is unknown; a known rate of 0 is returned as 0.
        std::optional<decimal> lookup(std::string_view currency, std::string_view issuer, timestamp at) const;
        std::size_t size() const noexcept;
        bool empty() const noexcept { return entries_.empty(); }
    private:
        std::map<std::pair<std::string, std::string>, std::vector<std::pair<timestamp, decimal>>, std::less<>> entries_;
    };

    // CSV with header currency,issuer,window_start,rate
    rate_table parse_rates_csv(std::string_view text);
    // [{"currency","issuer","window_start","rate"}]
    rate_table parse_rates_json(std::string_view text);
    // by extension: .csv or .json
    rate_table load_rates(const std::filesystem::path &path);

    // ---- payment value ----

    enum class payment_class : std::uint8_t { value_carrying, zero_value, unknown_value, failed };
    inline constexpr payment_class all_payment_classes[] = { payment_class::value_carrying, payment_class::zero_value,
        payment_class::unknown_value, payment_class::failed };

    std::string_view payment_class_name(payment_class c) noexcept;

    // Expects an XRPL Payment. Failed payments are FAILED whatever they carry.
    payment_class classify_payment_value(const action &payment, timestamp at, const rate_table &rates);

    bool is_partial_payment(const action &payment);

    // Amount actually delivered: meta delivered_amount when stored, else the Amount field.
    std::optional<decimal> delivered_amount(const action &payment);

    struct payment_value_summary {
        std::map<payment_class, std::uint64_t> counts;
        std::uint64_t total = 0;
        std::uint64_t successful = 0;
        std::uint64_t partial = 0;
        std::uint64_t partial_value_carrying = 0;
        std::uint64_t partial_unknown = 0;

        void add(payment_class c, bool partial_payment);
        void merge(const payment_value_summary &o);
        // value-carrying share of all successful payments
        std::optional<decimal> strict_share() const;
        // same, leaving out partial payments and payments of unknown value
        std::optional<decimal> lenient_share() const;
        bool operator==(const payment_value_summary &) const = default;
    };

    // ---- wash trading ----

    struct trade_record {
        std::string buyer;
        std::string seller;
        decimal base_amount;
        decimal quote_amount;
        std::string base_currency;
        std::string quote_currency;
        decimal fee_buyer;
        decimal fee_seller;
        std::string tx_id;

        bool operator==(const trade_record &) const = default;
    };

    // Reads a settled-trade action (data.buyer, data.seller, data.base/quote as "<amount> <symbol>",
    // data.buyer_fee/seller_fee). nullopt when the action does not carry a trade.
    std::optional<trade_record> extract_trade(const action &a);

    struct wash_thresholds {
        decimal self_trade_ratio = decimal::parse("0.5");
        decimal balance_drift = decimal::parse("0.01");
        std::size_t top_k = 5;
        std::size_t evidence_cap = default_evidence_cap;
    };

    class wash_trade_accumulator {
    public:
        void add(const trade_record &t);
        void merge(const wash_trade_accumulator &o);
        std::uint64_t trade_count() const noexcept { return trades_; }
        // one report per account, sorted by account
        std::vector<anomaly_report> reports(const wash_thresholds &th = {}) const;
    private:
        struct flow {
            decimal sent;
            decimal received;
            bool operator==(const flow &) const = default;
        };
        struct account_stats {
            std::uint64_t trades = 0;
            std::uint64_t self_trades = 0;
            std::map<std::string, flow, std::less<>> currencies;
            std::vector<std::string> evidence;
        };
        std::uint64_t trades_ = 0;
        std::map<std::string, account_stats, std::less<>> accounts_;
        // (buyer, seller) -> trades; needed for the top-k union share
        std::map<std::pair<std::string, std::string>, std::uint64_t> pairs_;
        std::size_t evidence_cap_ = default_evidence_cap;
    };

    std::vector<anomaly_report> detect_wash_trades(std::span<const trade_record> trades, const wash_thresholds &th = {});

    // ---- boomerang transfers ----

    struct transfer {
        std::string from;
        std::string to;
        decimal amount;
        std::string currency;
        std::string tx_id;
        std::uint64_t height = 0;

        bool operator==(const transfer &) const = default;
    };

    // Token transfer view of an action: data.from/data.to when present, else sender/receiver.
    std::optional<transfer> extract_transfer(const action &a, std::uint64_t height);

    struct boomerang_options {
        // 0 matches inside one transaction only; otherwise legs may be up to `window` blocks apart
        std::uint64_t window = 0;
        std::size_t evidence_cap = default_evidence_cap;
    };

    class boomerang_accumulator {
    public:
        explicit boomerang_accumulator(boomerang_options opts = {});
        // transfers of one transaction, in action order
        void add_transaction(std::span<const transfer> legs);
        void merge(boomerang_accumulator &&o);
        // one report per (sender, contract) pair, sorted; clean pairs only on request
        std::vector<anomaly_report> reports(bool include_clean = true) const;
        std::uint64_t matched_pairs() const;
    private:
        struct pair_stats {
            std::uint64_t outgoing = 0;
            std::uint64_t matched = 0;
            std::vector<std::string> evidence;
        };
        // per-transaction matches plus, when window > 0, the cross-transaction pass over leftovers
        std::map<std::pair<std::string, std::string>, pair_stats> settled_pairs() const;

        boomerang_options opts_;
        std::map<std::pair<std::string, std::string>, pair_stats> pairs_;
        std::map<std::string, std::uint64_t, std::less<>> sender_totals_;
        // legs left unmatched inside their transaction, kept only when window > 0
        std::vector<transfer> leftovers_;
    };

    std::vector<anomaly_report> detect_boomerang(std::span<const transfer> transfers, const boomerang_options &opts = {});

    // ---- spam accounts ----

    struct spam_thresholds {
        std::uint64_t min_volume = 100000;
        decimal failure_ratio = decimal::parse("0.99");
        decimal type_share = decimal::parse("0.98");
        std::size_t evidence_cap = default_evidence_cap;
    };

    class spam_accumulator {
    public:
        void add(const action &a);
        void merge(const spam_accumulator &o);
        // reports for accounts at or above the volume floor, sorted by account
        std::vector<anomaly_report> reports(const spam_thresholds &th = {}) const;
    private:
        struct account_stats {
            std::uint64_t total = 0;
            std::uint64_t failed = 0;
            std::map<std::string, std::uint64_t, std::less<>> by_type;
            std::map<std::string, std::uint64_t, std::less<>> errors;
            std::set<std::uint64_t> destination_tags;
            std::vector<std::string> evidence;
        };
        std::map<std::string, account_stats, std::less<>> accounts_;
        std::size_t evidence_cap_ = default_evidence_cap;
    };

    // ---- value flow ----

    struct flow_key {
        std::string sender_entity;
        std::string currency;
        std::string receiver_entity;

        auto operator<=>(const flow_key &) const = default;
    };

    using flow_map = std::map<flow_key, decimal>;

    class value_flow_accumulator {
    public:
        // payments that are not VALUE_CARRYING are ignored
        void add(const action &payment, timestamp at, const rate_table &rates);
        void merge(const value_flow_accumulator &o);
        // aggregate by entity
        flow_map flows(const accounts::account_registry &registry) const;
    private:
        // keyed by raw addresses; entities are resolved at the end
        flow_map by_address_;
    };

    flow_map value_flow(std::span<const std::pair<action, timestamp>> payments, const rate_table &rates,
        const accounts::account_registry &registry);
}
