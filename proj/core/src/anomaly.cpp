#include <chainscope/anomaly.hpp>
#include <chainscope/adapters/adapter.hpp>
#include <chainscope/error.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <nlohmann/json.hpp>

namespace chainscope::anomaly {
    using json = nlohmann::json;

    namespace {
        constexpr std::string_view xrp = "XRP";
        const decimal drops_per_xrp { std::int64_t { 1000000 } };

        std::string_view trim(std::string_view s)
        {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
                s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
                s.remove_suffix(1);
            return s;
        }

        std::vector<std::string_view> split_csv(std::string_view line)
        {
            std::vector<std::string_view> out;
            size_t pos = 0;
            while (true) {
                const auto comma = line.find(',', pos);
                out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
                if (comma == std::string_view::npos)
                    break;
                pos = comma + 1;
            }
            return out;
        }

        decimal ratio_or_zero(const decimal &num, const decimal &den)
        {
            return den.is_zero() ? decimal {} : decimal::ratio(num, den);
        }

        decimal count_ratio(std::uint64_t num, std::uint64_t den)
        {
            return den == 0 ? decimal {} : decimal::ratio(decimal { num }, decimal { den });
        }

        void push_evidence(std::vector<std::string> &ev, const std::string &tx, std::size_t cap)
        {
            if (ev.size() < cap && !tx.empty())
                ev.push_back(tx);
        }

        void append_evidence(std::vector<std::string> &into, const std::vector<std::string> &from, std::size_t cap)
        {
            for (const auto &e : from) {
                if (into.size() >= cap)
                    break;
                into.push_back(e);
            }
        }

        // "12.5000 EOS" -> (12.5, EOS)
        bool parse_asset(std::string_view text, decimal &amount, std::string &symbol)
        {
            text = trim(text);
            const auto space = text.find(' ');
            if (space == std::string_view::npos)
                return false;
            if (!decimal::try_parse(text.substr(0, space), amount))
                return false;
            symbol.assign(trim(text.substr(space + 1)));
            return !symbol.empty();
        }

        // payload value holding an asset: plain "<amount> <symbol>" or {"quantity": ...}
        bool payload_asset(const action &a, std::string_view key, decimal &amount, std::string &symbol)
        {
            const auto *e = find_payload(a.payload, key);
            if (!e)
                return false;
            if (!e->raw_json)
                return parse_asset(e->value, amount, symbol);
            const auto doc = json::parse(e->value, nullptr, false);
            if (doc.is_object() && doc.contains("quantity") && doc["quantity"].is_string())
                return parse_asset(doc["quantity"].get<std::string>(), amount, symbol);
            return false;
        }

        decimal payload_fee(const action &a, std::string_view key)
        {
            decimal amount;
            std::string symbol;
            if (payload_asset(a, key, amount, symbol))
                return amount;
            if (const auto *e = find_payload(a.payload, key)) {
                if (decimal::try_parse(trim(e->value), amount))
                    return amount;
            }
            return {};
        }

        std::optional<std::string> payload_string(const action &a, std::string_view key)
        {
            const auto *e = find_payload(a.payload, key);
            if (!e || e->raw_json)
                return std::nullopt;
            return e->value;
        }

        // XRPL amount JSON: drops string or {"currency","issuer","value"}
        std::optional<decimal> xrpl_amount_value(const json &v)
        {
            decimal d;
            if (v.is_string()) {
                if (!decimal::try_parse(v.get<std::string>(), d))
                    return std::nullopt;
                return d / drops_per_xrp;
            }
            if (v.is_object() && v.contains("value") && v["value"].is_string()) {
                if (!decimal::try_parse(v["value"].get<std::string>(), d))
                    return std::nullopt;
                return d;
            }
            return std::nullopt;
        }

        bool is_native(const action &a)
        {
            return !a.issuer && (!a.currency || *a.currency == xrp);
        }
    }

    // ---- rates ----

    void rate_table::add(std::string currency, std::string issuer, timestamp window_start, decimal rate)
    {
        if (rate.sign() < 0)
            throw config_error("negative rate for " + currency + "+" + issuer);
        auto &windows = entries_[{ std::move(currency), std::move(issuer) }];
        const auto pos = std::lower_bound(windows.begin(), windows.end(), window_start,
            [](const auto &w, timestamp t) { return w.first < t; });
        if (pos != windows.end() && pos->first == window_start)
            pos->second = rate;
        else
            windows.insert(pos, { window_start, rate });
    }

    std::optional<decimal> rate_table::lookup(std::string_view currency, std::string_view issuer, timestamp at) const
    {
        const auto it = entries_.find(std::pair<std::string, std::string> { currency, issuer });
        if (it == entries_.end() || it->second.empty())
            return std::nullopt;
        const auto &windows = it->second;
        auto pos = std::upper_bound(windows.begin(), windows.end(), at, [](timestamp t, const auto &w) { return t < w.first; });
        if (pos == windows.begin())
            return windows.front().second;
        return std::prev(pos)->second;
    }

    std::size_t rate_table::size() const noexcept
    {
        std::size_t n = 0;
        for (const auto &[_, w] : entries_)
            n += w.size();
        return n;
    }

    rate_table parse_rates_csv(std::string_view text)
    {
        rate_table t;
        std::istringstream in { std::string { text } };
        std::string line;
        size_t lineno = 0;
        int col_currency = -1, col_issuer = -1, col_start = -1, col_rate = -1;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty())
                continue;
            const auto cells = split_csv(line);
            if (col_currency < 0) {
                for (size_t i = 0; i < cells.size(); ++i) {
                    if (cells[i] == "currency") col_currency = static_cast<int>(i);
                    else if (cells[i] == "issuer") col_issuer = static_cast<int>(i);
                    else if (cells[i] == "window_start") col_start = static_cast<int>(i);
                    else if (cells[i] == "rate") col_rate = static_cast<int>(i);
                }
                if (col_currency < 0 || col_issuer < 0 || col_start < 0 || col_rate < 0)
                    throw config_error("rates csv: header must name currency,issuer,window_start,rate");
                continue;
            }
            const auto need = static_cast<size_t>(std::max({ col_currency, col_issuer, col_start, col_rate }));
            if (cells.size() <= need)
                throw config_error("rates csv line " + std::to_string(lineno) + ": too few columns");
            timestamp start;
            if (!try_parse_utc(cells[col_start], start))
                throw config_error("rates csv line " + std::to_string(lineno) + ": bad window_start");
            decimal rate;
            if (!decimal::try_parse(cells[col_rate], rate))
                throw config_error("rates csv line " + std::to_string(lineno) + ": bad rate");
            t.add(std::string { cells[col_currency] }, std::string { cells[col_issuer] }, start, rate);
        }
        return t;
    }

    rate_table parse_rates_json(std::string_view text)
    {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error &ex) {
            throw config_error(std::string { "rates json: " } + ex.what());
        }
        if (!doc.is_array())
            throw config_error("rates json must be an array");
        rate_table t;
        for (size_t i = 0; i < doc.size(); ++i) {
            const auto &o = doc[i];
            const auto where = "rates[" + std::to_string(i) + "]";
            if (!o.is_object() || !o.contains("currency") || !o.contains("window_start") || !o.contains("rate"))
                throw config_error(where + " needs currency, window_start and rate");
            timestamp start;
            if (!o["window_start"].is_string() || !try_parse_utc(o["window_start"].get<std::string>(), start))
                throw config_error(where + ": bad window_start");
            decimal rate;
            const auto &r = o["rate"];
            const auto rate_text = r.is_string() ? r.get<std::string>() : r.dump();
            if (!(r.is_string() || r.is_number()) || !decimal::try_parse(rate_text, rate))
                throw config_error(where + ": bad rate");
            const std::string issuer = o.contains("issuer") && o["issuer"].is_string() ? o["issuer"].get<std::string>() : "";
            t.add(o["currency"].get<std::string>(), issuer, start, rate);
        }
        return t;
    }

    rate_table load_rates(const std::filesystem::path &path)
    {
        std::ifstream in { path, std::ios::binary };
        if (!in)
            throw config_error("cannot open rate table " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        if (path.extension() == ".csv")
            return parse_rates_csv(ss.str());
        return parse_rates_json(ss.str());
    }

    // ---- payment value ----

    std::string_view payment_class_name(payment_class c) noexcept
    {
        switch (c) {
            case payment_class::value_carrying: return "VALUE_CARRYING";
            case payment_class::zero_value: return "ZERO_VALUE";
            case payment_class::unknown_value: return "UNKNOWN_VALUE";
            case payment_class::failed: return "FAILED";
        }
        return "UNKNOWN_VALUE";
    }

    payment_class classify_payment_value(const action &payment, timestamp at, const rate_table &rates)
    {
        if (!payment.success)
            return payment_class::failed;
        if (is_native(payment)) {
            const auto amount = payment.amount;
            return amount && amount->sign() > 0 ? payment_class::value_carrying : payment_class::zero_value;
        }
        const auto rate = rates.lookup(*payment.currency, payment.issuer.value_or(""), at);
        if (!rate)
            return payment_class::unknown_value;
        return rate->sign() > 0 ? payment_class::value_carrying : payment_class::zero_value;
    }

    bool is_partial_payment(const action &payment)
    {
        const auto *flags = find_payload(payment.payload, "Flags");
        if (!flags)
            return false;
        std::uint64_t v = 0;
        for (const char c : flags->value) {
            if (c < '0' || c > '9')
                return false;
            v = v * 10 + static_cast<std::uint64_t>(c - '0');
        }
        return (v & adapters::xrpl::partial_payment_flag) != 0;
    }

    std::optional<decimal> delivered_amount(const action &payment)
    {
        const payload_entry *e = find_payload(payment.payload, "meta.delivered_amount");
        std::optional<json> value;
        if (e) {
            value = e->raw_json ? json::parse(e->value, nullptr, false) : json(e->value);
        } else if (const auto *meta = find_payload(payment.payload, "metaData"); meta && meta->raw_json) {
            const auto doc = json::parse(meta->value, nullptr, false);
            if (doc.is_object() && doc.contains("delivered_amount"))
                value = doc["delivered_amount"];
        }
        if (value) {
            if (auto d = xrpl_amount_value(*value))
                return d;
        }
        return payment.amount;
    }

    void payment_value_summary::add(payment_class c, bool partial_payment)
    {
        ++counts[c];
        ++total;
        if (c != payment_class::failed) {
            ++successful;
            if (partial_payment) {
                ++partial;
                if (c == payment_class::value_carrying)
                    ++partial_value_carrying;
                if (c == payment_class::unknown_value)
                    ++partial_unknown;
            }
        }
    }

    void payment_value_summary::merge(const payment_value_summary &o)
    {
        for (const auto &[c, n] : o.counts)
            counts[c] += n;
        total += o.total;
        successful += o.successful;
        partial += o.partial;
        partial_value_carrying += o.partial_value_carrying;
        partial_unknown += o.partial_unknown;
    }

    std::optional<decimal> payment_value_summary::strict_share() const
    {
        if (successful == 0)
            return std::nullopt;
        const auto it = counts.find(payment_class::value_carrying);
        return count_ratio(it == counts.end() ? 0 : it->second, successful);
    }

    std::optional<decimal> payment_value_summary::lenient_share() const
    {
        const auto count_of = [&](payment_class c) {
            const auto it = counts.find(c);
            return it == counts.end() ? std::uint64_t { 0 } : it->second;
        };
        const auto vc = count_of(payment_class::value_carrying) - partial_value_carrying;
        const auto unknown_full = count_of(payment_class::unknown_value) - partial_unknown;
        const auto den = successful - partial - unknown_full;
        if (den == 0)
            return std::nullopt;
        return count_ratio(vc, den);
    }

    // ---- wash trading ----

    std::optional<trade_record> extract_trade(const action &a)
    {
        auto buyer = payload_string(a, "data.buyer");
        auto seller = payload_string(a, "data.seller");
        if (!buyer || !seller)
            return std::nullopt;
        trade_record t;
        t.buyer = std::move(*buyer);
        t.seller = std::move(*seller);
        if (!payload_asset(a, "data.base", t.base_amount, t.base_currency)
            || !payload_asset(a, "data.quote", t.quote_amount, t.quote_currency))
            return std::nullopt;
        if (t.base_amount.sign() < 0 || t.quote_amount.sign() < 0)
            return std::nullopt;
        t.fee_buyer = payload_fee(a, "data.buyer_fee");
        t.fee_seller = payload_fee(a, "data.seller_fee");
        t.tx_id = a.tx_id;
        return t;
    }

    void wash_trade_accumulator::add(const trade_record &t)
    {
        ++trades_;
        ++pairs_[{ t.buyer, t.seller }];
        const bool self = t.buyer == t.seller;
        // buyer receives base and pays quote; seller the reverse
        auto &b = accounts_[t.buyer];
        ++b.trades;
        b.currencies[t.base_currency].received += t.base_amount;
        b.currencies[t.quote_currency].sent += t.quote_amount;
        if (self) {
            ++b.self_trades;
            b.currencies[t.base_currency].sent += t.base_amount;
            b.currencies[t.quote_currency].received += t.quote_amount;
            push_evidence(b.evidence, t.tx_id, evidence_cap_);
            return;
        }
        auto &s = accounts_[t.seller];
        ++s.trades;
        s.currencies[t.base_currency].sent += t.base_amount;
        s.currencies[t.quote_currency].received += t.quote_amount;
    }

    void wash_trade_accumulator::merge(const wash_trade_accumulator &o)
    {
        trades_ += o.trades_;
        for (const auto &[k, n] : o.pairs_)
            pairs_[k] += n;
        for (const auto &[acct, st] : o.accounts_) {
            auto &mine = accounts_[acct];
            mine.trades += st.trades;
            mine.self_trades += st.self_trades;
            for (const auto &[cur, f] : st.currencies) {
                auto &mf = mine.currencies[cur];
                mf.sent += f.sent;
                mf.received += f.received;
            }
            append_evidence(mine.evidence, st.evidence, evidence_cap_);
        }
    }

    std::vector<anomaly_report> wash_trade_accumulator::reports(const wash_thresholds &th) const
    {
        // top-k accounts by involvement, ties by name
        std::vector<std::pair<std::uint64_t, std::string_view>> ranked;
        for (const auto &[acct, st] : accounts_)
            ranked.emplace_back(st.trades, acct);
        std::sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        std::set<std::string_view> top;
        for (size_t i = 0; i < ranked.size() && i < th.top_k; ++i)
            top.insert(ranked[i].second);
        std::uint64_t top_trades = 0;
        for (const auto &[k, n] : pairs_) {
            if (top.contains(k.first) || top.contains(k.second))
                top_trades += n;
        }
        const auto concentration = count_ratio(top_trades, trades_);

        std::vector<anomaly_report> out;
        for (const auto &[acct, st] : accounts_) {
            anomaly_report r;
            r.detector = "wash-trade";
            r.subject = { acct };
            const auto self_ratio = count_ratio(st.self_trades, st.trades);
            std::uint64_t low_drift = 0;
            decimal max_drift;
            for (const auto &[cur, f] : st.currencies) {
                const auto &larger = std::max(f.sent, f.received);
                const auto drift = ratio_or_zero((f.sent - f.received).abs(), larger);
                if (drift < th.balance_drift)
                    ++low_drift;
                max_drift = std::max(max_drift, drift);
            }
            const auto currencies = static_cast<std::uint64_t>(st.currencies.size());
            r.metrics["trades"] = decimal { st.trades };
            r.metrics["self_trades"] = decimal { st.self_trades };
            r.metrics["self_trade_ratio"] = self_ratio;
            r.metrics["currencies"] = decimal { currencies };
            r.metrics["low_drift_currencies"] = decimal { low_drift };
            r.metrics["max_balance_drift"] = max_drift;
            r.metrics["top_k_concentration"] = concentration;
            r.metrics["threshold_self_trade_ratio"] = th.self_trade_ratio;
            r.metrics["threshold_balance_drift"] = th.balance_drift;
            // "most" currencies: strictly more than half
            const bool drift_ok = currencies > 0 && low_drift * 2 > currencies;
            r.outcome = self_ratio >= th.self_trade_ratio && drift_ok ? verdict::flagged : verdict::clean;
            r.evidence = st.evidence;
            if (r.evidence.size() > th.evidence_cap)
                r.evidence.resize(th.evidence_cap);
            out.push_back(std::move(r));
        }
        return out;
    }

    std::vector<anomaly_report> detect_wash_trades(std::span<const trade_record> trades, const wash_thresholds &th)
    {
        wash_trade_accumulator acc;
        for (const auto &t : trades)
            acc.add(t);
        return acc.reports(th);
    }

    // ---- boomerang ----

    std::optional<transfer> extract_transfer(const action &a, std::uint64_t height)
    {
        if (!a.success || !a.amount || !a.currency)
            return std::nullopt;
        transfer t;
        t.from = payload_string(a, "data.from").value_or(a.sender);
        t.to = payload_string(a, "data.to").value_or(a.receiver);
        if (t.from.empty() || t.to.empty() || t.from == t.to)
            return std::nullopt;
        t.amount = *a.amount;
        t.currency = *a.currency;
        t.tx_id = a.tx_id;
        t.height = height;
        return t;
    }

    namespace {
        struct match_result {
            std::vector<size_t> outbound;  // indices of matched outbound legs
            std::vector<bool> used;
        };

        // Greedy in leg order: an outbound A->C leg pairs with the first later unused C->A leg of the same
        // amount and currency, plus the first later unused C->A leg in another currency.
        match_result match_legs(const std::vector<transfer> &legs, std::uint64_t window)
        {
            match_result m;
            m.used.assign(legs.size(), false);
            std::map<std::pair<std::string_view, std::string_view>, std::vector<size_t>> by_route;
            for (size_t i = 0; i < legs.size(); ++i)
                by_route[{ legs[i].from, legs[i].to }].push_back(i);
            for (size_t i = 0; i < legs.size(); ++i) {
                if (m.used[i])
                    continue;
                const auto &o = legs[i];
                const auto back = by_route.find({ o.to, o.from });
                if (back == by_route.end())
                    continue;
                std::optional<size_t> ret, issue;
                for (const auto j : back->second) {
                    if (j <= i || m.used[j])
                        continue;
                    if (legs[j].height - o.height > window)
                        break;
                    if (!ret && legs[j].currency == o.currency && legs[j].amount == o.amount)
                        ret = j;
                    else if (!issue && legs[j].currency != o.currency)
                        issue = j;
                    if (ret && issue)
                        break;
                }
                if (ret && issue) {
                    m.used[i] = m.used[*ret] = m.used[*issue] = true;
                    m.outbound.push_back(i);
                }
            }
            return m;
        }
    }

    boomerang_accumulator::boomerang_accumulator(boomerang_options opts)
        : opts_ { opts }
    {
    }

    void boomerang_accumulator::add_transaction(std::span<const transfer> legs)
    {
        if (legs.empty())
            return;
        std::vector<transfer> v { legs.begin(), legs.end() };
        for (const auto &t : v) {
            ++pairs_[{ t.from, t.to }].outgoing;
            ++sender_totals_[t.from];
        }
        const auto m = match_legs(v, 0);
        for (const auto i : m.outbound) {
            auto &p = pairs_[{ v[i].from, v[i].to }];
            ++p.matched;
            push_evidence(p.evidence, v[i].tx_id, opts_.evidence_cap);
        }
        if (opts_.window > 0) {
            for (size_t i = 0; i < v.size(); ++i) {
                if (!m.used[i])
                    leftovers_.push_back(std::move(v[i]));
            }
        }
    }

    void boomerang_accumulator::merge(boomerang_accumulator &&o)
    {
        for (auto &[k, st] : o.pairs_) {
            auto &mine = pairs_[k];
            mine.outgoing += st.outgoing;
            mine.matched += st.matched;
            append_evidence(mine.evidence, st.evidence, opts_.evidence_cap);
        }
        for (const auto &[k, n] : o.sender_totals_)
            sender_totals_[k] += n;
        leftovers_.insert(leftovers_.end(), std::make_move_iterator(o.leftovers_.begin()),
            std::make_move_iterator(o.leftovers_.end()));
    }

    std::map<std::pair<std::string, std::string>, boomerang_accumulator::pair_stats> boomerang_accumulator::settled_pairs() const
    {
        auto pairs = pairs_;
        if (opts_.window > 0 && !leftovers_.empty()) {
            // cross-transaction pass over what the per-transaction pass left behind
            auto legs = leftovers_;
            std::stable_sort(legs.begin(), legs.end(), [](const auto &a, const auto &b) { return a.height < b.height; });
            const auto m = match_legs(legs, opts_.window);
            for (const auto i : m.outbound) {
                auto &p = pairs[{ legs[i].from, legs[i].to }];
                ++p.matched;
                push_evidence(p.evidence, legs[i].tx_id, opts_.evidence_cap);
            }
        }
        return pairs;
    }

    std::vector<anomaly_report> boomerang_accumulator::reports(bool include_clean) const
    {
        std::vector<anomaly_report> out;
        for (const auto &[k, st] : settled_pairs()) {
            if (!include_clean && st.matched == 0)
                continue;
            anomaly_report r;
            r.detector = "boomerang";
            r.subject = { k.first, k.second };
            const auto total = sender_totals_.at(k.first);
            r.metrics["matched_pairs"] = decimal { st.matched };
            r.metrics["transfers_to_contract"] = decimal { st.outgoing };
            r.metrics["sender_transfers"] = decimal { total };
            r.metrics["share_of_sender_traffic"] = count_ratio(st.matched, total);
            r.metrics["window_blocks"] = decimal { opts_.window };
            r.evidence = st.evidence;
            r.outcome = st.matched > 0 ? verdict::flagged : verdict::clean;
            out.push_back(std::move(r));
        }
        return out;
    }

    std::uint64_t boomerang_accumulator::matched_pairs() const
    {
        std::uint64_t n = 0;
        for (const auto &[_, st] : settled_pairs())
            n += st.matched;
        return n;
    }

    std::vector<anomaly_report> detect_boomerang(std::span<const transfer> transfers, const boomerang_options &opts)
    {
        boomerang_accumulator acc { opts };
        size_t begin = 0;
        for (size_t i = 1; i <= transfers.size(); ++i) {
            if (i == transfers.size() || transfers[i].tx_id != transfers[begin].tx_id
                || transfers[i].height != transfers[begin].height) {
                acc.add_transaction(transfers.subspan(begin, i - begin));
                begin = i;
            }
        }
        return acc.reports();
    }

    // ---- spam ----

    namespace {
        constexpr std::size_t max_tags_per_account = 64;
    }

    void spam_accumulator::add(const action &a)
    {
        if (a.sender.empty())
            return;
        auto &st = accounts_[a.sender];
        ++st.total;
        ++st.by_type[a.name];
        if (!a.success) {
            ++st.failed;
            ++st.errors[a.error_code.value_or("")];
            push_evidence(st.evidence, a.tx_id, evidence_cap_);
        }
        if (a.destination_tag) {
            st.destination_tags.insert(*a.destination_tag);
            // keep the smallest tags so the kept set does not depend on visit order
            if (st.destination_tags.size() > max_tags_per_account)
                st.destination_tags.erase(std::prev(st.destination_tags.end()));
        }
    }

    void spam_accumulator::merge(const spam_accumulator &o)
    {
        for (const auto &[acct, st] : o.accounts_) {
            auto &mine = accounts_[acct];
            mine.total += st.total;
            mine.failed += st.failed;
            for (const auto &[k, n] : st.by_type)
                mine.by_type[k] += n;
            for (const auto &[k, n] : st.errors)
                mine.errors[k] += n;
            for (const auto t : st.destination_tags) {
                mine.destination_tags.insert(t);
                if (mine.destination_tags.size() > max_tags_per_account)
                    mine.destination_tags.erase(std::prev(mine.destination_tags.end()));
            }
            append_evidence(mine.evidence, st.evidence, evidence_cap_);
        }
    }

    std::vector<anomaly_report> spam_accumulator::reports(const spam_thresholds &th) const
    {
        struct candidate {
            std::string_view account;
            const account_stats *st;
            decimal failure;
            decimal share;
            std::string_view top_type;
        };
        std::vector<candidate> cands;
        for (const auto &[acct, st] : accounts_) {
            if (st.total < th.min_volume)
                continue;
            std::uint64_t top = 0;
            std::string_view top_type;
            for (const auto &[k, n] : st.by_type) {
                if (n > top) {
                    top = n;
                    top_type = k;
                }
            }
            cands.push_back({ acct, &st, count_ratio(st.failed, st.total), count_ratio(top, st.total), top_type });
        }
        // destination tags shared by several single-purpose accounts
        std::map<std::uint64_t, std::uint64_t> tag_users;
        for (const auto &c : cands) {
            if (c.share >= th.type_share) {
                for (const auto t : c.st->destination_tags)
                    ++tag_users[t];
            }
        }
        std::vector<anomaly_report> out;
        for (const auto &c : cands) {
            anomaly_report r;
            r.detector = "spam-account";
            r.subject = { std::string { c.account } };
            std::uint64_t shared = 0;
            if (c.share >= th.type_share) {
                for (const auto t : c.st->destination_tags) {
                    if (tag_users[t] >= 2)
                        ++shared;
                }
            }
            r.metrics["transactions"] = decimal { c.st->total };
            r.metrics["failed"] = decimal { c.st->failed };
            r.metrics["failure_ratio"] = c.failure;
            r.metrics["top_type_share"] = c.share;
            r.metrics["shared_destination_tags"] = decimal { shared };
            r.metrics["threshold_min_volume"] = decimal { th.min_volume };
            r.metrics["threshold_failure_ratio"] = th.failure_ratio;
            r.metrics["threshold_type_share"] = th.type_share;
            const bool failing = c.failure >= th.failure_ratio;
            const bool clustered = c.share >= th.type_share && shared > 0;
            r.outcome = failing || clustered ? verdict::flagged : verdict::clean;
            r.evidence.push_back("top_type:" + std::string { c.top_type });
            for (const auto t : c.st->destination_tags) {
                if (tag_users[t] >= 2 && r.evidence.size() < th.evidence_cap)
                    r.evidence.push_back("destination_tag:" + std::to_string(t));
            }
            for (const auto &e : c.st->evidence) {
                if (r.evidence.size() >= th.evidence_cap)
                    break;
                r.evidence.push_back(e);
            }
            out.push_back(std::move(r));
        }
        return out;
    }

    // ---- value flow ----

    void value_flow_accumulator::add(const action &payment, timestamp at, const rate_table &rates)
    {
        if (classify_payment_value(payment, at, rates) != payment_class::value_carrying)
            return;
        const auto amount = delivered_amount(payment);
        if (!amount)
            return;
        decimal rate { 1 };
        std::string ticker { xrp };
        if (!is_native(payment)) {
            rate = *rates.lookup(*payment.currency, payment.issuer.value_or(""), at);
            ticker = *payment.currency;
        }
        by_address_[{ payment.sender, std::move(ticker), payment.receiver }] += *amount * rate;
    }

    void value_flow_accumulator::merge(const value_flow_accumulator &o)
    {
        for (const auto &[k, v] : o.by_address_)
            by_address_[k] += v;
    }

    flow_map value_flow_accumulator::flows(const accounts::account_registry &registry) const
    {
        std::unordered_map<std::string, std::string> cache;
        auto entity = [&](const std::string &addr) -> const std::string & {
            auto it = cache.find(addr);
            if (it == cache.end())
                it = cache.emplace(addr, accounts::resolve_entity(addr, registry)).first;
            return it->second;
        };
        flow_map out;
        for (const auto &[k, v] : by_address_)
            out[{ entity(k.sender_entity), k.currency, entity(k.receiver_entity) }] += v;
        return out;
    }

    flow_map value_flow(std::span<const std::pair<action, timestamp>> payments, const rate_table &rates,
        const accounts::account_registry &registry)
    {
        value_flow_accumulator acc;
        for (const auto &[a, t] : payments)
            acc.add(a, t, rates);
        return acc.flows(registry);
    }
}
