#include <chainscope/error.hpp>
#include <chainscope/pipeline.hpp>
#include <chainscope/throughput.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <nlohmann/json.hpp>

namespace chainscope::pipeline {
    using json = nlohmann::ordered_json;
    namespace fs = std::filesystem;

    namespace {
        constexpr std::chrono::seconds default_window = std::chrono::hours { 6 };

        size_t line_of_offset(std::string_view text, size_t offset)
        {
            offset = std::min(offset, text.size());
            return 1 + static_cast<size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
        }

        fs::path resolve_path(const fs::path &p, const fs::path &base)
        {
            if (p.is_absolute() || base.empty())
                return p;
            return base / p;
        }

        // typed access to a processor's Params object
        class params {
        public:
            params(const processor_config &cfg)
                : where_ { "processor '" + cfg.name + "' (" + cfg.type + ")" }
            {
                doc_ = json::parse(cfg.params_json, nullptr, false);
                if (doc_.is_discarded() || !doc_.is_object())
                    throw config_error(where_ + ": Params must be an object");
            }

            bool has(const char *key) const { return doc_.contains(key) && !doc_[key].is_null(); }

            std::string string(const char *key, std::optional<std::string> fallback = std::nullopt) const
            {
                if (!has(key)) {
                    if (!fallback)
                        throw config_error(where_ + ": missing Params." + key);
                    return *fallback;
                }
                if (!doc_[key].is_string())
                    throw config_error(where_ + ": Params." + key + " must be a string");
                return doc_[key].get<std::string>();
            }

            std::uint64_t uint(const char *key, std::uint64_t fallback) const
            {
                if (!has(key))
                    return fallback;
                const auto &v = doc_[key];
                if (v.is_number_unsigned())
                    return v.get<std::uint64_t>();
                if (v.is_string()) {
                    const auto s = v.get<std::string>();
                    if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
                        return std::stoull(s);
                }
                throw config_error(where_ + ": Params." + key + " must be a non-negative integer");
            }

            decimal number(const char *key, const decimal &fallback) const
            {
                if (!has(key))
                    return fallback;
                const auto &v = doc_[key];
                decimal d;
                const auto text = v.is_string() ? v.get<std::string>() : v.dump();
                if (!(v.is_string() || v.is_number()) || !decimal::try_parse(text, d))
                    throw config_error(where_ + ": Params." + key + " must be a number");
                return d;
            }

            std::chrono::seconds duration(const char *key, std::chrono::seconds fallback) const
            {
                if (!has(key))
                    return fallback;
                try {
                    return parse_duration(string(key));
                } catch (const config_error &ex) {
                    throw config_error(where_ + ": Params." + key + ": " + ex.what());
                }
            }

            std::vector<std::string> list(const char *key, std::vector<std::string> fallback) const
            {
                if (!has(key))
                    return fallback;
                const auto &v = doc_[key];
                if (v.is_string())
                    return { v.get<std::string>() };
                if (!v.is_array())
                    throw config_error(where_ + ": Params." + key + " must be a string or a list of strings");
                std::vector<std::string> out;
                for (const auto &e : v) {
                    if (!e.is_string())
                        throw config_error(where_ + ": Params." + key + " must hold strings");
                    out.push_back(e.get<std::string>());
                }
                return out;
            }

            [[noreturn]] void fail(const std::string &what) const { throw config_error(where_ + ": " + what); }
        private:
            json doc_;
            std::string where_;
        };

        std::string key_of(const action &a, action_category c, group_key by)
        {
            switch (by) {
                case group_key::sender: return a.sender;
                case group_key::receiver: return a.receiver;
                case group_key::name: return a.name;
                case group_key::category: return std::string { category_name(c) };
                case group_key::error_code: return a.success ? std::string { "success" } : a.error_code.value_or("failed");
            }
            return a.name;
        }

        std::int64_t window_of(timestamp t, std::chrono::seconds width)
        {
            return epoch_seconds(window_start(t, width));
        }

        std::vector<action_category> classify_all(const block &b, const classification_rules &rules)
        {
            std::vector<action_category> cats;
            cats.reserve(b.actions.size());
            for (const auto &a : b.actions)
                cats.push_back(classify_action(rules, a));
            return cats;
        }

        void merge_histogram(histogram &into, const histogram &from)
        {
            for (const auto &[k, n] : from) {
                if (auto it = into.find(k); it != into.end())
                    it->second += n;
                else
                    into.emplace(k, n);
            }
        }

        std::string metrics_text(const std::map<std::string, decimal> &m)
        {
            std::string out;
            for (const auto &[k, v] : m) {
                if (!out.empty())
                    out += ';';
                out += k + "=" + v.to_string();
            }
            return out;
        }

        std::string join(const std::vector<std::string> &v, char sep)
        {
            std::string out;
            for (const auto &s : v) {
                if (!out.empty())
                    out += sep;
                out += s;
            }
            return out;
        }

        const std::vector<std::string> report_columns = { "detector", "subject", "verdict", "metrics", "evidence" };

        std::vector<std::string> report_row(const anomaly::anomaly_report &r)
        {
            return { r.detector, join(r.subject, '|'), r.flagged() ? "flagged" : "clean", metrics_text(r.metrics),
                join(r.evidence, ';') };
        }

        // ---- shared state types, used by both the processors and the direct forms ----

        struct count_state {
            std::uint64_t transactions = 0;
            std::uint64_t blocks = 0;
            std::uint64_t actions = 0;
            std::optional<std::uint64_t> first_height, last_height;
            std::optional<timestamp> first_time, last_time;
            std::map<std::int64_t, std::uint64_t> windows;

            void consume(const block &b, std::chrono::seconds width)
            {
                transactions += throughput_count(b);
                ++blocks;
                actions += b.actions.size();
                first_height = first_height ? std::min(*first_height, b.height) : b.height;
                last_height = last_height ? std::max(*last_height, b.height) : b.height;
                first_time = first_time ? std::min(*first_time, b.time) : b.time;
                last_time = last_time ? std::max(*last_time, b.time) : b.time;
                windows[window_of(b.time, width)] += throughput_count(b);
            }

            void merge(const count_state &o)
            {
                transactions += o.transactions;
                blocks += o.blocks;
                actions += o.actions;
                if (o.first_height) {
                    first_height = first_height ? std::min(*first_height, *o.first_height) : o.first_height;
                    last_height = last_height ? std::max(*last_height, *o.last_height) : o.last_height;
                    first_time = first_time ? std::min(*first_time, *o.first_time) : o.first_time;
                    last_time = last_time ? std::max(*last_time, *o.last_time) : o.last_time;
                }
                for (const auto &[w, n] : o.windows)
                    windows[w] += n;
            }
        };

        struct top_state {
            // account -> counterparty -> actions
            std::unordered_map<std::string, std::unordered_map<std::string, std::uint64_t>> by_account;

            void consume(const block &b, direction dir, const std::optional<std::string> &name_filter)
            {
                for (const auto &a : b.actions) {
                    if (a.sender.empty() || a.receiver.empty())
                        continue;
                    if (name_filter && a.name != *name_filter)
                        continue;
                    if (dir == direction::sent)
                        ++by_account[a.sender][a.receiver];
                    else
                        ++by_account[a.receiver][a.sender];
                }
            }

            void merge(top_state &&o)
            {
                if (by_account.empty()) {
                    by_account = std::move(o.by_account);
                    return;
                }
                for (auto &[acct, peers] : o.by_account) {
                    auto &mine = by_account[acct];
                    if (mine.empty()) {
                        mine = std::move(peers);
                        continue;
                    }
                    for (const auto &[p, n] : peers)
                        mine[p] += n;
                }
            }

            std::vector<account_rank> rank(std::size_t n) const
            {
                std::vector<account_rank> all;
                all.reserve(by_account.size());
                for (const auto &[acct, peers] : by_account) {
                    account_rank r;
                    r.account = acct;
                    for (const auto &[_, c] : peers)
                        r.count += c;
                    r.unique_counterparties = peers.size();
                    all.push_back(std::move(r));
                }
                const auto keep = std::min(n, all.size());
                auto better = [](const account_rank &a, const account_rank &b) {
                    return a.count != b.count ? a.count > b.count : a.account < b.account;
                };
                std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
                all.resize(keep);
                for (auto &r : all)
                    r.avg_per_counterparty = decimal::ratio(decimal { r.count }, decimal { r.unique_counterparties });
                return all;
            }
        };

        using distribution_counts = std::map<std::pair<action_category, std::string>, std::uint64_t>;

        // ---- processor plumbing ----

        template <typename Acc>
        Acc &same_type(accumulator &other)
        {
            auto *p = dynamic_cast<Acc *>(&other);
            if (!p)
                throw error("merging accumulators of different processors");
            return *p;
        }

        class processor_base: public processor {
        public:
            processor_base(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : cfg_ { cfg }, ctx_ { std::move(ctx) }
            {
            }

            const std::string &name() const noexcept override { return cfg_.name; }

            processor_result blank(result_kind kind) const
            {
                processor_result r;
                r.name = cfg_.name;
                r.type = cfg_.type;
                r.chain = ctx_->chain;
                r.kind = kind;
                return r;
            }
        protected:
            processor_config cfg_;
            std::shared_ptr<const run_context> ctx_;
        };

        constexpr adapters::parse_options typed_only { adapters::payload_mode::none, false };
        constexpr adapters::parse_options with_details { adapters::payload_mode::detector, true };
        constexpr adapters::parse_options with_amounts { adapters::payload_mode::none, true };

        // count-transactions
        class count_processor: public processor_base {
        public:
            count_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx))
            {
                const params p { cfg };
                width_ = p.duration("Duration", default_window);
            }

            std::string_view type() const noexcept override { return "count-transactions"; }
            adapters::parse_options needs() const noexcept override { return typed_only; }

            struct acc: accumulator {
                const count_processor *owner;
                count_state st;

                explicit acc(const count_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category>) override { st.consume(b, owner->width_); }
                void merge(accumulator &&other) override { st.merge(same_type<acc>(other).st); }
                processor_result finish() override { return owner->finish(st); }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }

            processor_result finish(const count_state &st) const
            {
                auto r = blank(result_kind::scalar);
                r.params["Duration"] = format_duration(width_);
                r.window_seconds = width_.count();
                r.scalars["transactions"] = std::to_string(st.transactions);
                r.scalars["blocks"] = std::to_string(st.blocks);
                r.scalars["actions"] = std::to_string(st.actions);
                r.scalars["window_alignment"] = "epoch";
                for (const auto &[w, n] : st.windows)
                    r.series[w]["transactions"] = n;
                if (st.blocks == 0)
                    return r;
                r.scalars["first_height"] = std::to_string(*st.first_height);
                r.scalars["last_height"] = std::to_string(*st.last_height);
                r.scalars["first_block_time"] = format_utc(*st.first_time);
                r.scalars["last_block_time"] = format_utc(*st.last_time);
                std::vector<throughput::window_count> series;
                for (const auto &[w, n] : st.windows)
                    series.push_back({ from_epoch_seconds(w), n });
                const auto peak = throughput::max_tps(series, width_);
                r.scalars["max_tps"] = peak.tps.to_fixed(2);
                r.scalars["max_tps_exact"] = peak.tps.to_string();
                r.scalars["max_window_start"] = format_utc(peak.window_start);
                r.scalars["max_window_transactions"] = std::to_string(peak.count);
                const bool calendar = ctx_->observation_start && ctx_->observation_end;
                const auto from = calendar ? *ctx_->observation_start : *st.first_time;
                const auto to = calendar ? *ctx_->observation_end : *st.last_time;
                r.scalars["average_mode"] = calendar ? "calendar" : "block_span";
                r.scalars["observation_start"] = format_utc(from);
                r.scalars["observation_end"] = format_utc(to);
                if (to > from) {
                    const auto avg = throughput::average_tps(st.transactions, from, to);
                    r.scalars["avg_tps"] = avg.to_fixed(2);
                    r.scalars["avg_tps_exact"] = avg.to_string();
                }
                if (ctx_->alleged_tps)
                    r.scalars["alleged_tps"] = ctx_->alleged_tps->to_string();
                return r;
            }
        private:
            std::chrono::seconds width_ {};
        };

        group_key by_param(const params &p, const char *fallback)
        {
            const auto text = p.string("By", std::string { fallback });
            const auto k = parse_group_key(text);
            if (!k)
                p.fail("Params.By must be one of sender, receiver, name, category, error_code (got '" + text + "')");
            return *k;
        }

        // group-actions
        class group_processor: public processor_base {
        public:
            group_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx)), by_ { by_param(params { cfg }, "name") }
            {
            }

            std::string_view type() const noexcept override { return "group-actions"; }
            adapters::parse_options needs() const noexcept override { return typed_only; }

            struct acc: accumulator {
                const group_processor *owner;
                histogram counts;

                explicit acc(const group_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category> cats) override
                {
                    for (size_t i = 0; i < b.actions.size(); ++i)
                        ++counts[key_of(b.actions[i], cats[i], owner->by_)];
                }
                void merge(accumulator &&other) override { merge_histogram(counts, same_type<acc>(other).counts); }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::keyed_histogram);
                    r.params["By"] = std::string { group_key_name(owner->by_) };
                    std::uint64_t total = 0;
                    for (const auto &[_, n] : counts)
                        total += n;
                    r.scalars["total_actions"] = std::to_string(total);
                    r.counts = std::move(counts);
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        private:
            group_key by_;
        };

        // group-actions-over-time
        class group_time_processor: public processor_base {
        public:
            group_time_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx))
            {
                const params p { cfg };
                by_ = by_param(p, "name");
                width_ = p.duration("Duration", default_window);
            }

            std::string_view type() const noexcept override { return "group-actions-over-time"; }
            adapters::parse_options needs() const noexcept override { return typed_only; }

            struct acc: accumulator {
                const group_time_processor *owner;
                time_series series;

                explicit acc(const group_time_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category> cats) override
                {
                    if (b.actions.empty())
                        return;
                    auto &h = series[window_of(b.time, owner->width_)];
                    for (size_t i = 0; i < b.actions.size(); ++i)
                        ++h[key_of(b.actions[i], cats[i], owner->by_)];
                }
                void merge(accumulator &&other) override
                {
                    for (auto &[w, h] : same_type<acc>(other).series)
                        merge_histogram(series[w], h);
                }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::time_series);
                    r.params["By"] = std::string { group_key_name(owner->by_) };
                    r.params["Duration"] = format_duration(owner->width_);
                    r.window_seconds = owner->width_.count();
                    r.scalars["window_alignment"] = "epoch";
                    r.series = std::move(series);
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        private:
            group_key by_ {};
            std::chrono::seconds width_ {};
        };

        // top-accounts
        class top_processor: public processor_base {
        public:
            top_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx))
            {
                const params p { cfg };
                const auto d = p.string("Direction", std::string { "sent" });
                if (d == "sent")
                    dir_ = direction::sent;
                else if (d == "received")
                    dir_ = direction::received;
                else
                    p.fail("Params.Direction must be sent or received (got '" + d + "')");
                n_ = p.uint("N", 10);
                if (n_ == 0)
                    p.fail("Params.N must be at least 1");
                if (p.has("Name"))
                    name_filter_ = p.string("Name");
            }

            std::string_view type() const noexcept override { return "top-accounts"; }
            adapters::parse_options needs() const noexcept override { return typed_only; }

            struct acc: accumulator {
                const top_processor *owner;
                top_state st;

                explicit acc(const top_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category>) override
                {
                    st.consume(b, owner->dir_, owner->name_filter_);
                }
                void merge(accumulator &&other) override { st.merge(std::move(same_type<acc>(other).st)); }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::table);
                    r.params["Direction"] = owner->dir_ == direction::sent ? "sent" : "received";
                    r.params["N"] = std::to_string(owner->n_);
                    if (owner->name_filter_)
                        r.params["Name"] = *owner->name_filter_;
                    r.scalars["accounts"] = std::to_string(st.by_account.size());
                    r.columns = { "rank", "account", "count", "unique_counterparties", "avg_per_counterparty" };
                    size_t rank = 0;
                    for (const auto &a : st.rank(owner->n_))
                        r.rows.push_back({ std::to_string(++rank), a.account, std::to_string(a.count),
                            std::to_string(a.unique_counterparties), a.avg_per_counterparty.to_fixed(2) });
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        private:
            direction dir_ = direction::sent;
            std::uint64_t n_ = 10;
            std::optional<std::string> name_filter_;
        };

        // action-distribution
        class distribution_processor: public processor_base {
        public:
            using processor_base::processor_base;

            std::string_view type() const noexcept override { return "action-distribution"; }
            adapters::parse_options needs() const noexcept override { return typed_only; }

            struct acc: accumulator {
                const distribution_processor *owner;
                distribution_counts counts;

                explicit acc(const distribution_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category> cats) override
                {
                    for (size_t i = 0; i < b.actions.size(); ++i)
                        ++counts[{ cats[i], b.actions[i].name }];
                }
                void merge(accumulator &&other) override
                {
                    for (const auto &[k, n] : same_type<acc>(other).counts)
                        counts[k] += n;
                }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::table);
                    std::uint64_t total = 0;
                    for (const auto &[_, n] : counts)
                        total += n;
                    r.scalars["total_actions"] = std::to_string(total);
                    r.columns = { "category", "name", "count", "percent" };
                    for (const auto &row : apportion(std::move(counts)))
                        r.rows.push_back({ std::string { category_name(row.category) }, row.name, std::to_string(row.count),
                            format_permille(row.permille) });
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        };

        // wash-trades
        class wash_processor: public processor_base {
        public:
            wash_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx))
            {
                const params p { cfg };
                contract_ = p.string("Contract", std::string { "whaleextrust" });
                const auto names = p.list("Actions", { "verifytrade2", "verifytrade3" });
                actions_.insert(names.begin(), names.end());
                th_.self_trade_ratio = p.number("SelfTradeRatio", th_.self_trade_ratio);
                th_.balance_drift = p.number("BalanceDrift", th_.balance_drift);
                th_.top_k = p.uint("TopK", th_.top_k);
            }

            std::string_view type() const noexcept override { return "wash-trades"; }
            adapters::parse_options needs() const noexcept override { return with_details; }

            struct acc: accumulator {
                const wash_processor *owner;
                anomaly::wash_trade_accumulator st;
                std::uint64_t unreadable = 0;

                explicit acc(const wash_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category>) override
                {
                    for (const auto &a : b.actions) {
                        if (!a.success || a.receiver != owner->contract_ || !owner->actions_.contains(a.name))
                            continue;
                        if (auto t = anomaly::extract_trade(a))
                            st.add(*t);
                        else
                            ++unreadable;
                    }
                }
                void merge(accumulator &&other) override
                {
                    auto &o = same_type<acc>(other);
                    st.merge(o.st);
                    unreadable += o.unreadable;
                }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::table);
                    r.params["Contract"] = owner->contract_;
                    r.params["SelfTradeRatio"] = owner->th_.self_trade_ratio.to_string();
                    r.params["BalanceDrift"] = owner->th_.balance_drift.to_string();
                    r.params["TopK"] = std::to_string(owner->th_.top_k);
                    r.columns = report_columns;
                    std::uint64_t flagged = 0;
                    for (const auto &rep : st.reports(owner->th_)) {
                        flagged += rep.flagged();
                        r.rows.push_back(report_row(rep));
                    }
                    r.scalars["trades"] = std::to_string(st.trade_count());
                    r.scalars["unreadable_trades"] = std::to_string(unreadable);
                    r.scalars["flagged"] = std::to_string(flagged);
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        private:
            std::string contract_;
            std::set<std::string, std::less<>> actions_;
            anomaly::wash_thresholds th_;
        };

        // boomerang
        class boomerang_processor: public processor_base {
        public:
            boomerang_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx))
            {
                const params p { cfg };
                opts_.window = p.uint("Window", 0);
                const auto names = p.list("Actions", { "transfer" });
                actions_.insert(names.begin(), names.end());
                include_clean_ = p.string("IncludeClean", std::string { "false" }) == "true";
            }

            std::string_view type() const noexcept override { return "boomerang"; }
            adapters::parse_options needs() const noexcept override { return with_details; }

            struct acc: accumulator {
                const boomerang_processor *owner;
                anomaly::boomerang_accumulator st;

                explicit acc(const boomerang_processor *o): owner { o }, st { o->opts_ } {}
                void consume(const block &b, std::span<const action_category>) override
                {
                    std::vector<anomaly::transfer> legs;
                    const std::string *tx = nullptr;
                    for (const auto &a : b.actions) {
                        if (tx && a.tx_id != *tx) {
                            st.add_transaction(legs);
                            legs.clear();
                        }
                        tx = &a.tx_id;
                        if (!owner->actions_.contains(a.name))
                            continue;
                        if (auto t = anomaly::extract_transfer(a, b.height))
                            legs.push_back(std::move(*t));
                    }
                    st.add_transaction(legs);
                }
                void merge(accumulator &&other) override { st.merge(std::move(same_type<acc>(other).st)); }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::table);
                    r.params["Window"] = std::to_string(owner->opts_.window);
                    r.columns = report_columns;
                    for (const auto &rep : st.reports(owner->include_clean_))
                        r.rows.push_back(report_row(rep));
                    r.scalars["matched_pairs"] = std::to_string(st.matched_pairs());
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        private:
            anomaly::boomerang_options opts_;
            std::set<std::string, std::less<>> actions_;
            bool include_clean_ = false;
        };

        // spam-accounts
        class spam_processor: public processor_base {
        public:
            spam_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx))
            {
                const params p { cfg };
                th_.min_volume = p.uint("MinVolume", th_.min_volume);
                th_.failure_ratio = p.number("FailureRatio", th_.failure_ratio);
                th_.type_share = p.number("TypeShare", th_.type_share);
            }

            std::string_view type() const noexcept override { return "spam-accounts"; }
            adapters::parse_options needs() const noexcept override { return typed_only; }

            struct acc: accumulator {
                const spam_processor *owner;
                anomaly::spam_accumulator st;

                explicit acc(const spam_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category>) override
                {
                    for (const auto &a : b.actions)
                        st.add(a);
                }
                void merge(accumulator &&other) override { st.merge(same_type<acc>(other).st); }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::table);
                    r.params["MinVolume"] = std::to_string(owner->th_.min_volume);
                    r.params["FailureRatio"] = owner->th_.failure_ratio.to_string();
                    r.params["TypeShare"] = owner->th_.type_share.to_string();
                    r.columns = report_columns;
                    std::uint64_t flagged = 0;
                    for (const auto &rep : st.reports(owner->th_)) {
                        flagged += rep.flagged();
                        r.rows.push_back(report_row(rep));
                    }
                    r.scalars["flagged"] = std::to_string(flagged);
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        private:
            anomaly::spam_thresholds th_;
        };

        void require_xrpl(const processor_config &cfg, const run_context &ctx)
        {
            if (ctx.chain != chain_id::xrpl)
                throw config_error("processor '" + cfg.name + "' (" + cfg.type + ") only applies to XRPL archives");
        }

        // payment-values
        class payment_processor: public processor_base {
        public:
            payment_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx))
            {
                require_xrpl(cfg, *ctx_);
                width_ = params { cfg }.duration("Duration", default_window);
            }

            std::string_view type() const noexcept override { return "payment-values"; }
            adapters::parse_options needs() const noexcept override { return with_details; }

            struct acc: accumulator {
                const payment_processor *owner;
                anomaly::payment_value_summary summary;
                time_series series;

                explicit acc(const payment_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category>) override
                {
                    if (b.actions.empty())
                        return;
                    auto &h = series[window_of(b.time, owner->width_)];
                    for (const auto &a : b.actions) {
                        if (a.name == "Payment") {
                            const auto c = anomaly::classify_payment_value(a, b.time, owner->ctx_->rates);
                            summary.add(c, anomaly::is_partial_payment(a));
                            ++h["Payment:" + std::string { anomaly::payment_class_name(c) }];
                        } else {
                            ++h[a.name + (a.success ? ":SUCCESS" : ":FAILED")];
                        }
                    }
                }
                void merge(accumulator &&other) override
                {
                    auto &o = same_type<acc>(other);
                    summary.merge(o.summary);
                    for (auto &[w, h] : o.series)
                        merge_histogram(series[w], h);
                }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::table);
                    r.params["Duration"] = format_duration(owner->width_);
                    r.window_seconds = owner->width_.count();
                    r.columns = { "class", "count" };
                    for (const auto c : anomaly::all_payment_classes) {
                        const auto it = summary.counts.find(c);
                        r.rows.push_back({ std::string { anomaly::payment_class_name(c) },
                            std::to_string(it == summary.counts.end() ? 0 : it->second) });
                    }
                    r.scalars["payments"] = std::to_string(summary.total);
                    r.scalars["successful"] = std::to_string(summary.successful);
                    r.scalars["partial"] = std::to_string(summary.partial);
                    if (const auto s = summary.strict_share())
                        r.scalars["strict_share"] = s->to_string();
                    if (const auto s = summary.lenient_share())
                        r.scalars["lenient_share"] = s->to_string();
                    r.series = std::move(series);
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        private:
            std::chrono::seconds width_ {};
        };

        // value-flow
        class flow_processor: public processor_base {
        public:
            flow_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
                : processor_base(cfg, std::move(ctx))
            {
                require_xrpl(cfg, *ctx_);
            }

            std::string_view type() const noexcept override { return "value-flow"; }
            adapters::parse_options needs() const noexcept override { return with_details; }

            struct acc: accumulator {
                const flow_processor *owner;
                anomaly::value_flow_accumulator st;

                explicit acc(const flow_processor *o): owner { o } {}
                void consume(const block &b, std::span<const action_category>) override
                {
                    for (const auto &a : b.actions) {
                        if (a.name == "Payment")
                            st.add(a, b.time, owner->ctx_->rates);
                    }
                }
                void merge(accumulator &&other) override { st.merge(same_type<acc>(other).st); }
                processor_result finish() override
                {
                    auto r = owner->blank(result_kind::table);
                    r.columns = { "sender_entity", "currency", "receiver_entity", "xrp_value" };
                    for (const auto &[k, v] : st.flows(owner->ctx_->registry))
                        r.rows.push_back({ k.sender_entity, k.currency, k.receiver_entity, v.to_string() });
                    return r;
                }
            };

            std::unique_ptr<accumulator> start() const override { return std::make_unique<acc>(this); }
        };
    }

    // ---- configuration ----

    pipeline_config parse_config(std::string_view json_text, const fs::path &base_dir)
    {
        json doc;
        try {
            doc = json::parse(json_text);
        } catch (const json::parse_error &ex) {
            throw config_error("config line " + std::to_string(line_of_offset(json_text, ex.byte)) + ": " + ex.what());
        }
        if (!doc.is_object())
            throw config_error("config must be a JSON object");
        static const std::set<std::string, std::less<>> known = { "Pattern", "StartBlock", "EndBlock", "Processors", "Chain",
            "Rules", "Rates", "Accounts", "ObservationStart", "ObservationEnd", "AllegedTPS", "OutputDir" };
        for (const auto &[k, _] : doc.items()) {
            if (!known.contains(k))
                throw config_error("config: unknown field '" + k + "'");
        }
        auto need_string = [&](const char *key) {
            if (!doc.contains(key) || !doc[key].is_string())
                throw config_error(std::string { "config: field '" } + key + "' must be a string");
            return doc[key].get<std::string>();
        };
        auto need_uint = [&](const char *key) {
            if (!doc.contains(key) || !doc[key].is_number_unsigned())
                throw config_error(std::string { "config: field '" } + key + "' must be a non-negative integer");
            return doc[key].get<std::uint64_t>();
        };
        auto opt_path = [&](const char *key) -> std::optional<fs::path> {
            if (!doc.contains(key))
                return std::nullopt;
            return resolve_path(need_string(key), base_dir);
        };
        auto opt_time = [&](const char *key) -> std::optional<timestamp> {
            if (!doc.contains(key))
                return std::nullopt;
            timestamp t;
            if (!try_parse_utc(need_string(key), t))
                throw config_error(std::string { "config: field '" } + key + "' is not a UTC date");
            return t;
        };

        pipeline_config cfg;
        cfg.pattern = resolve_path(need_string("Pattern"), base_dir).string();
        cfg.start_block = need_uint("StartBlock");
        cfg.end_block = need_uint("EndBlock");
        if (cfg.end_block < cfg.start_block)
            throw config_error("config: EndBlock " + std::to_string(cfg.end_block) + " precedes StartBlock "
                + std::to_string(cfg.start_block));
        if (!doc.contains("Processors") || !doc["Processors"].is_array())
            throw config_error("config: field 'Processors' must be a list");
        std::set<std::string, std::less<>> names;
        for (size_t i = 0; i < doc["Processors"].size(); ++i) {
            const auto &p = doc["Processors"][i];
            const auto where = "config: Processors[" + std::to_string(i) + "]";
            if (!p.is_object())
                throw config_error(where + " must be an object");
            for (const auto &[k, _] : p.items()) {
                if (k != "Name" && k != "Type" && k != "Params")
                    throw config_error(where + ": unknown field '" + k + "'");
            }
            if (!p.contains("Name") || !p["Name"].is_string() || p["Name"].get<std::string>().empty())
                throw config_error(where + ": field 'Name' must be a non-empty string");
            if (!p.contains("Type") || !p["Type"].is_string())
                throw config_error(where + ": field 'Type' must be a string");
            processor_config pc;
            pc.name = p["Name"].get<std::string>();
            pc.type = p["Type"].get<std::string>();
            if (std::find(std::begin(processor_types), std::end(processor_types), pc.type) == std::end(processor_types))
                throw config_error(where + ": unknown processor type '" + pc.type + "'");
            if (pc.name.find_first_of("/\\") != std::string::npos || pc.name == "." || pc.name == ".." || pc.name == "manifest")
                throw config_error(where + ": Name '" + pc.name + "' cannot be used as an output file name");
            if (!names.insert(pc.name).second)
                throw config_error(where + ": duplicate Name '" + pc.name + "'");
            if (p.contains("Params")) {
                if (!p["Params"].is_object())
                    throw config_error(where + ": field 'Params' must be an object");
                pc.params_json = p["Params"].dump();
            }
            cfg.processors.push_back(std::move(pc));
        }
        if (doc.contains("Chain")) {
            const auto text = need_string("Chain");
            cfg.chain = parse_chain(text);
            if (!cfg.chain)
                throw config_error("config: unknown Chain '" + text + "'");
        }
        cfg.rules = opt_path("Rules");
        cfg.rates = opt_path("Rates");
        cfg.accounts = opt_path("Accounts");
        cfg.output_dir = opt_path("OutputDir");
        cfg.observation_start = opt_time("ObservationStart");
        cfg.observation_end = opt_time("ObservationEnd");
        if (cfg.observation_start.has_value() != cfg.observation_end.has_value())
            throw config_error("config: ObservationStart and ObservationEnd go together");
        if (cfg.observation_start && *cfg.observation_end <= *cfg.observation_start)
            throw config_error("config: ObservationEnd must follow ObservationStart");
        if (doc.contains("AllegedTPS")) {
            const auto &v = doc["AllegedTPS"];
            decimal d;
            const auto text = v.is_string() ? v.get<std::string>() : v.dump();
            if (!(v.is_string() || v.is_number()) || !decimal::try_parse(text, d) || d.sign() < 0)
                throw config_error("config: field 'AllegedTPS' must be a non-negative number");
            cfg.alleged_tps = d;
        }
        return cfg;
    }

    pipeline_config load_config(const fs::path &path)
    {
        std::ifstream in { path, std::ios::binary };
        if (!in)
            throw config_error("cannot open config " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), path.parent_path());
    }

    chain_id config_chain(const pipeline_config &cfg)
    {
        if (cfg.chain)
            return *cfg.chain;
        const auto file = fs::path { cfg.pattern }.filename().string();
        const auto cut = file.find("_blocks");
        if (cut != std::string::npos) {
            if (const auto c = parse_chain(std::string_view { file }.substr(0, cut)))
                return *c;
        }
        throw config_error("config: cannot infer the chain from Pattern '" + cfg.pattern + "'; set Chain");
    }

    std::shared_ptr<run_context> make_context(const pipeline_config &cfg)
    {
        auto ctx = std::make_shared<run_context>();
        ctx->chain = config_chain(cfg);
        ctx->rules = cfg.rules ? load_rules(*cfg.rules) : default_rules(ctx->chain);
        if (ctx->rules.chain != ctx->chain)
            throw config_error("config: Rules are for " + std::string { chain_name(ctx->rules.chain) } + ", archive is "
                + std::string { chain_name(ctx->chain) });
        if (cfg.rates)
            ctx->rates = anomaly::load_rates(*cfg.rates);
        if (cfg.accounts)
            ctx->registry = accounts::load_registry(*cfg.accounts);
        ctx->observation_start = cfg.observation_start;
        ctx->observation_end = cfg.observation_end;
        ctx->alleged_tps = cfg.alleged_tps;
        return ctx;
    }

    // ---- results ----

    std::string_view result_kind_name(result_kind k) noexcept
    {
        switch (k) {
            case result_kind::scalar: return "scalar";
            case result_kind::keyed_histogram: return "keyed_histogram";
            case result_kind::time_series: return "time_series";
            case result_kind::table: return "table";
        }
        return "scalar";
    }

    std::string result_to_json(const processor_result &r)
    {
        json doc;
        doc["name"] = r.name;
        doc["type"] = r.type;
        doc["chain"] = chain_token(r.chain);
        doc["kind"] = result_kind_name(r.kind);
        doc["params"] = r.params;
        doc["scalars"] = r.scalars;
        auto counts = json::object();
        for (const auto &[k, n] : r.counts)
            counts[k] = n;
        doc["counts"] = std::move(counts);
        doc["window_seconds"] = r.window_seconds;
        auto series = json::array();
        for (const auto &[w, h] : r.series) {
            auto hc = json::object();
            for (const auto &[k, n] : h)
                hc[k] = n;
            series.push_back({ { "start", format_utc(from_epoch_seconds(w)) }, { "counts", std::move(hc) } });
        }
        doc["series"] = std::move(series);
        doc["columns"] = r.columns;
        doc["rows"] = r.rows;
        return doc.dump(2) + "\n";
    }

    processor_result result_from_json(std::string_view text)
    {
        json doc;
        try {
            doc = json::parse(text);
            processor_result r;
            r.name = doc.at("name").get<std::string>();
            r.type = doc.at("type").get<std::string>();
            const auto chain = parse_chain(doc.at("chain").get<std::string>());
            if (!chain)
                throw missing_result("result '" + r.name + "' names an unknown chain");
            r.chain = *chain;
            const auto kind = doc.at("kind").get<std::string>();
            bool known = false;
            for (const auto k : { result_kind::scalar, result_kind::keyed_histogram, result_kind::time_series, result_kind::table }) {
                if (result_kind_name(k) == kind) {
                    r.kind = k;
                    known = true;
                }
            }
            if (!known)
                throw missing_result("result '" + r.name + "' has unknown kind '" + kind + "'");
            r.params = doc.at("params").get<std::map<std::string, std::string>>();
            r.scalars = doc.at("scalars").get<std::map<std::string, std::string>>();
            for (const auto &[k, v] : doc.at("counts").items())
                r.counts[k] = v.get<std::uint64_t>();
            r.window_seconds = doc.at("window_seconds").get<std::int64_t>();
            for (const auto &w : doc.at("series")) {
                auto &h = r.series[epoch_seconds(parse_utc(w.at("start").get<std::string>()))];
                for (const auto &[k, v] : w.at("counts").items())
                    h[k] = v.get<std::uint64_t>();
            }
            r.columns = doc.at("columns").get<std::vector<std::string>>();
            r.rows = doc.at("rows").get<std::vector<std::vector<std::string>>>();
            return r;
        } catch (const json::exception &ex) {
            throw missing_result(std::string { "unreadable result file: " } + ex.what());
        }
    }

    std::string csv_field(std::string_view v)
    {
        if (v.find_first_of(",\"\r\n") == std::string_view::npos)
            return std::string { v };
        std::string out = "\"";
        for (const char c : v) {
            if (c == '"')
                out += '"';
            out += c;
        }
        out += '"';
        return out;
    }

    std::string result_to_csv(const processor_result &r)
    {
        std::string out;
        auto line = [&](std::initializer_list<std::string_view> cells) {
            bool first = true;
            for (const auto c : cells) {
                if (!first)
                    out += ',';
                out += csv_field(c);
                first = false;
            }
            out += '\n';
        };
        switch (r.kind) {
            case result_kind::scalar:
                line({ "key", "value" });
                for (const auto &[k, v] : r.scalars)
                    line({ k, v });
                break;
            case result_kind::keyed_histogram:
                line({ "key", "count" });
                for (const auto &[k, n] : r.counts)
                    line({ k, std::to_string(n) });
                break;
            case result_kind::time_series:
                line({ "window_start", "key", "count" });
                for (const auto &[w, h] : r.series) {
                    const auto start = format_utc(from_epoch_seconds(w));
                    for (const auto &[k, n] : h)
                        line({ start, k, std::to_string(n) });
                }
                break;
            case result_kind::table: {
                auto row = [&](const std::vector<std::string> &cells) {
                    for (size_t i = 0; i < cells.size(); ++i) {
                        if (i)
                            out += ',';
                        out += csv_field(cells[i]);
                    }
                    out += '\n';
                };
                row(r.columns);
                for (const auto &cells : r.rows)
                    row(cells);
                break;
            }
        }
        return out;
    }

    // ---- processors ----

    std::unique_ptr<processor> make_processor(const processor_config &cfg, std::shared_ptr<const run_context> ctx)
    {
        if (!ctx)
            throw config_error("processor '" + cfg.name + "' has no run context");
        if (cfg.type == "count-transactions")
            return std::make_unique<count_processor>(cfg, std::move(ctx));
        if (cfg.type == "group-actions")
            return std::make_unique<group_processor>(cfg, std::move(ctx));
        if (cfg.type == "group-actions-over-time")
            return std::make_unique<group_time_processor>(cfg, std::move(ctx));
        if (cfg.type == "top-accounts")
            return std::make_unique<top_processor>(cfg, std::move(ctx));
        if (cfg.type == "action-distribution")
            return std::make_unique<distribution_processor>(cfg, std::move(ctx));
        if (cfg.type == "wash-trades")
            return std::make_unique<wash_processor>(cfg, std::move(ctx));
        if (cfg.type == "boomerang")
            return std::make_unique<boomerang_processor>(cfg, std::move(ctx));
        if (cfg.type == "spam-accounts")
            return std::make_unique<spam_processor>(cfg, std::move(ctx));
        if (cfg.type == "payment-values")
            return std::make_unique<payment_processor>(cfg, std::move(ctx));
        if (cfg.type == "value-flow")
            return std::make_unique<flow_processor>(cfg, std::move(ctx));
        throw config_error("processor '" + cfg.name + "': unknown processor type '" + cfg.type + "'");
    }

    adapters::parse_options combined_needs(std::span<const std::unique_ptr<processor>> processors)
    {
        adapters::parse_options out { adapters::payload_mode::none, false };
        for (const auto &p : processors) {
            const auto n = p->needs();
            out.payload = std::max(out.payload, n.payload);
            out.parse_amounts = out.parse_amounts || n.parse_amounts;
        }
        return out;
    }

    namespace {
        std::vector<std::unique_ptr<processor>> build(const std::vector<processor_config> &cfgs,
            const std::shared_ptr<const run_context> &ctx)
        {
            std::vector<std::unique_ptr<processor>> out;
            for (const auto &c : cfgs)
                out.push_back(make_processor(c, ctx));
            return out;
        }

        std::vector<std::unique_ptr<accumulator>> start_all(const std::vector<std::unique_ptr<processor>> &procs)
        {
            std::vector<std::unique_ptr<accumulator>> out;
            for (const auto &p : procs)
                out.push_back(p->start());
            return out;
        }

        struct chunk_output {
            std::vector<std::unique_ptr<accumulator>> accs;
            std::uint64_t lines = 0;
            std::uint64_t blocks = 0;
            std::uint64_t skipped = 0;
            std::vector<skipped_line> samples;
        };

        chunk_output process_chunk(const storage::archive_chunk &chunk, const storage::archive_pattern &pattern,
            const std::vector<std::unique_ptr<processor>> &procs, const run_context &ctx,
            const adapters::parse_options &popts, const run_options &opts)
        {
            chunk_output out;
            out.accs = start_all(procs);
            storage::line_reader reader { chunk.path };
            std::string line;
            std::vector<action_category> cats;
            std::uint64_t index = 0;
            while (reader.next(line)) {
                ++out.lines;
                const auto nominal = chunk.first_height + index++;
                block b;
                try {
                    b = adapters::parse_block(ctx.chain, line, popts);
                } catch (const error &ex) {
                    if (opts.on_malformed == malformed_policy::abort)
                        throw malformed_block(chunk.path.filename().string() + " line " + std::to_string(index) + ": " + ex.what());
                    // a line that cannot be placed counts only if its nominal slot is in range
                    if (nominal >= pattern.start && nominal <= pattern.end) {
                        ++out.skipped;
                        if (out.samples.size() < opts.skipped_sample_cap)
                            out.samples.push_back({ chunk.path.filename().string(), index, ex.what() });
                    }
                    continue;
                }
                if (b.height < pattern.start || b.height > pattern.end)
                    continue;
                ++out.blocks;
                cats.clear();
                for (const auto &a : b.actions)
                    cats.push_back(classify_action(ctx.rules, a));
                for (auto &acc : out.accs)
                    acc->consume(b, cats);
            }
            return out;
        }
    }

    run_summary run_pipeline(const std::vector<processor_config> &processors, const storage::archive_pattern &pattern,
        std::shared_ptr<const run_context> ctx, const run_options &opts)
    {
        const auto procs = build(processors, ctx);
        const auto popts = combined_needs(procs);
        const auto chunks = storage::resolve(pattern);
        run_summary summary;
        summary.gaps = storage::name_gaps(chunks, pattern.start, pattern.end);
        if (!summary.gaps.empty() && !opts.allow_gaps)
            throw missing_chunk(summary.gaps);
        summary.chunks = chunks.size();
        for (const auto &c : chunks) {
            if (c.chain != ctx->chain)
                throw chain_mismatch("archive chunk " + c.path.filename().string() + " belongs to "
                    + std::string { chain_name(c.chain) } + ", run is for " + std::string { chain_name(ctx->chain) });
        }

        auto merged = start_all(procs);
        std::vector<std::optional<chunk_output>> slots(chunks.size());
        size_t next_merge = 0;
        std::atomic<size_t> next_chunk { 0 };
        std::mutex mu;
        std::exception_ptr failure;

        auto absorb = [&](chunk_output &o) {
            for (size_t i = 0; i < merged.size(); ++i)
                merged[i]->merge(std::move(*o.accs[i]));
            summary.lines_read += o.lines;
            summary.blocks += o.blocks;
            summary.skipped_lines += o.skipped;
            for (auto &s : o.samples) {
                if (summary.skipped_samples.size() < opts.skipped_sample_cap)
                    summary.skipped_samples.push_back(std::move(s));
            }
        };

        auto work = [&] {
            for (;;) {
                const auto i = next_chunk.fetch_add(1);
                if (i >= chunks.size())
                    return;
                {
                    std::lock_guard lock { mu };
                    if (failure)
                        return;
                }
                try {
                    auto out = process_chunk(chunks[i], pattern, procs, *ctx, popts, opts);
                    std::lock_guard lock { mu };
                    slots[i] = std::move(out);
                    // fold finished chunks in index order so the reduction is fixed
                    while (next_merge < slots.size() && slots[next_merge]) {
                        absorb(*slots[next_merge]);
                        slots[next_merge].reset();
                        ++next_merge;
                    }
                } catch (...) {
                    std::lock_guard lock { mu };
                    if (!failure)
                        failure = std::current_exception();
                    return;
                }
            }
        };

        const auto workers = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(std::max<size_t>(chunks.size(), 1))));
        if (workers == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back(work);
        }
        if (failure)
            std::rethrow_exception(failure);
        for (auto &m : merged)
            summary.results.push_back(m->finish());
        return summary;
    }

    std::vector<processor_result> run_blocks(const std::vector<processor_config> &processors, std::span<const block> blocks,
        std::shared_ptr<const run_context> ctx)
    {
        const auto procs = build(processors, ctx);
        auto accs = start_all(procs);
        for (const auto &b : blocks) {
            const auto cats = classify_all(b, ctx->rules);
            for (auto &a : accs)
                a->consume(b, cats);
        }
        std::vector<processor_result> out;
        for (auto &a : accs)
            out.push_back(a->finish());
        return out;
    }

    // ---- direct forms ----

    std::optional<group_key> parse_group_key(std::string_view text) noexcept
    {
        if (text == "sender") return group_key::sender;
        if (text == "receiver") return group_key::receiver;
        if (text == "name") return group_key::name;
        if (text == "category") return group_key::category;
        if (text == "error_code") return group_key::error_code;
        return std::nullopt;
    }

    std::string_view group_key_name(group_key k) noexcept
    {
        switch (k) {
            case group_key::sender: return "sender";
            case group_key::receiver: return "receiver";
            case group_key::name: return "name";
            case group_key::category: return "category";
            case group_key::error_code: return "error_code";
        }
        return "name";
    }

    histogram group_actions(std::span<const block> blocks, group_key by, const classification_rules &rules)
    {
        histogram h;
        for (const auto &b : blocks) {
            for (const auto &a : b.actions)
                ++h[key_of(a, classify_action(rules, a), by)];
        }
        return h;
    }

    time_series group_actions_over_time(std::span<const block> blocks, group_key by, std::chrono::seconds duration,
        const classification_rules &rules)
    {
        if (duration.count() <= 0)
            throw config_error("duration must be positive");
        time_series s;
        for (const auto &b : blocks) {
            if (b.actions.empty())
                continue;
            auto &h = s[window_of(b.time, duration)];
            for (const auto &a : b.actions)
                ++h[key_of(a, classify_action(rules, a), by)];
        }
        return s;
    }

    std::vector<account_rank> top_accounts(std::span<const block> blocks, direction dir, std::size_t n,
        std::optional<std::string> name_filter)
    {
        if (n == 0)
            throw config_error("top_accounts: n must be at least 1");
        top_state st;
        for (const auto &b : blocks)
            st.consume(b, dir, name_filter);
        return st.rank(n);
    }

    std::vector<distribution_row> apportion(std::map<std::pair<action_category, std::string>, std::uint64_t> counts)
    {
        std::vector<distribution_row> rows;
        std::uint64_t total = 0;
        for (const auto &[k, n] : counts)
            total += n;
        if (total == 0) {
            for (auto &[k, n] : counts)
                rows.push_back({ k.first, k.second, n, 0 });
            return rows;
        }
        using wide = boost::multiprecision::checked_uint128_t;
        std::vector<wide> remainders;
        std::uint64_t assigned = 0;
        for (auto &[k, n] : counts) {
            const wide scaled = wide { n } * 1000;
            const auto units = static_cast<std::uint64_t>(scaled / total);
            remainders.push_back(scaled % total);
            assigned += units;
            rows.push_back({ k.first, k.second, n, units });
        }
        // hand the leftover tenths to the largest remainders; ties keep table order
        std::vector<size_t> order(rows.size());
        std::iota(order.begin(), order.end(), size_t { 0 });
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return remainders[a] > remainders[b]; });
        for (size_t i = 0; assigned < 1000 && i < order.size(); ++i, ++assigned)
            ++rows[order[i]].permille;
        return rows;
    }

    std::vector<distribution_row> action_distribution(std::span<const block> blocks, const classification_rules &rules)
    {
        distribution_counts counts;
        for (const auto &b : blocks) {
            for (const auto &a : b.actions)
                ++counts[{ classify_action(rules, a), a.name }];
        }
        return apportion(std::move(counts));
    }

    std::string format_permille(std::uint64_t permille)
    {
        return std::to_string(permille / 10) + "." + std::to_string(permille % 10);
    }
}
