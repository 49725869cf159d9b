#include <chainscope/error.hpp>
#include <chainscope/export.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <nlohmann/json.hpp>

namespace chainscope::tables {
    namespace fs = std::filesystem;
    using pipeline::processor_result;

    const std::vector<table_schema> &schemas()
    {
        static const std::vector<table_schema> all = {
            { "distribution", { "chain", "category", "name", "count", "percent" } },
            { "datasets", { "chain", "first_block", "last_block", "first_block_time", "last_block_time", "blocks", "transactions",
                              "avg_tps", "max_tps", "max_window_start", "alleged_tps" } },
            { "throughput_by_category", { "chain", "window_start", "category", "count" } },
            { "top_accounts", { "chain", "processor", "direction", "rank", "account", "count", "unique_counterparties",
                                  "avg_per_counterparty" } },
            { "anomalies", { "chain", "processor", "detector", "subject", "verdict", "metrics", "evidence" } },
            { "value_flows", { "sender_entity", "currency", "receiver_entity", "xrp_value" } },
            { "payment_values", { "chain", "class", "count" } },
            { "payment_series", { "chain", "window_start", "key", "count" } },
        };
        return all;
    }

    std::vector<processor_result> load_results(const fs::path &dir)
    {
        if (!fs::is_directory(dir))
            throw missing_result("no results directory " + dir.string());
        std::vector<fs::path> files;
        for (const auto &entry : fs::directory_iterator { dir }) {
            if (entry.is_regular_file() && entry.path().extension() == ".json" && entry.path().filename() != "manifest.json")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        std::vector<processor_result> out;
        for (const auto &f : files) {
            std::ifstream in { f, std::ios::binary };
            std::ostringstream ss;
            ss << in.rdbuf();
            try {
                out.push_back(pipeline::result_from_json(ss.str()));
            } catch (const missing_result &ex) {
                throw missing_result(f.string() + ": " + ex.what());
            }
        }
        if (out.empty())
            throw missing_result("no result files in " + dir.string());
        return out;
    }

    namespace {
        std::string scalar(const processor_result &r, const std::string &key)
        {
            const auto it = r.scalars.find(key);
            return it == r.scalars.end() ? std::string {} : it->second;
        }

        size_t column(const processor_result &r, std::string_view name)
        {
            const auto it = std::find(r.columns.begin(), r.columns.end(), name);
            if (it == r.columns.end())
                throw missing_result("result '" + r.name + "' has no column '" + std::string { name } + "'");
            return static_cast<size_t>(it - r.columns.begin());
        }

        std::string param(const processor_result &r, const std::string &key)
        {
            const auto it = r.params.find(key);
            return it == r.params.end() ? std::string {} : it->second;
        }

        bool is_anomaly_type(std::string_view type)
        {
            return type == "wash-trades" || type == "boomerang" || type == "spam-accounts";
        }

        // returns false when no result feeds the table
        bool fill(table &t, std::span<const processor_result> results)
        {
            bool fed = false;
            for (const auto &r : results) {
                const auto chain = std::string { chain_token(r.chain) };
                if (t.name == "distribution" && r.type == "action-distribution") {
                    fed = true;
                    const auto c = column(r, "category"), n = column(r, "name"), k = column(r, "count"), p = column(r, "percent");
                    for (const auto &row : r.rows)
                        t.rows.push_back({ chain, row[c], row[n], row[k], row[p] });
                } else if (t.name == "datasets" && r.type == "count-transactions") {
                    fed = true;
                    t.rows.push_back({ chain, scalar(r, "first_height"), scalar(r, "last_height"), scalar(r, "first_block_time"),
                        scalar(r, "last_block_time"), scalar(r, "blocks"), scalar(r, "transactions"), scalar(r, "avg_tps"),
                        scalar(r, "max_tps"), scalar(r, "max_window_start"), scalar(r, "alleged_tps") });
                } else if (t.name == "throughput_by_category" && r.type == "group-actions-over-time" && param(r, "By") == "category") {
                    fed = true;
                    for (const auto &[w, h] : r.series) {
                        const auto start = format_utc(from_epoch_seconds(w));
                        for (const auto &[k, n] : h)
                            t.rows.push_back({ chain, start, k, std::to_string(n) });
                    }
                } else if (t.name == "top_accounts" && r.type == "top-accounts") {
                    fed = true;
                    const auto rk = column(r, "rank"), a = column(r, "account"), k = column(r, "count"),
                               u = column(r, "unique_counterparties"), v = column(r, "avg_per_counterparty");
                    for (const auto &row : r.rows)
                        t.rows.push_back({ chain, r.name, param(r, "Direction"), row[rk], row[a], row[k], row[u], row[v] });
                } else if (t.name == "anomalies" && is_anomaly_type(r.type)) {
                    fed = true;
                    const auto d = column(r, "detector"), s = column(r, "subject"), v = column(r, "verdict"),
                               m = column(r, "metrics"), e = column(r, "evidence");
                    for (const auto &row : r.rows)
                        t.rows.push_back({ chain, r.name, row[d], row[s], row[v], row[m], row[e] });
                } else if (t.name == "value_flows" && r.type == "value-flow") {
                    fed = true;
                    const auto s = column(r, "sender_entity"), c = column(r, "currency"), rc = column(r, "receiver_entity"),
                               x = column(r, "xrp_value");
                    for (const auto &row : r.rows)
                        t.rows.push_back({ row[s], row[c], row[rc], row[x] });
                } else if (t.name == "payment_values" && r.type == "payment-values") {
                    fed = true;
                    const auto c = column(r, "class"), k = column(r, "count");
                    for (const auto &row : r.rows)
                        t.rows.push_back({ chain, row[c], row[k] });
                } else if (t.name == "payment_series" && r.type == "payment-values") {
                    fed = true;
                    for (const auto &[w, h] : r.series) {
                        const auto start = format_utc(from_epoch_seconds(w));
                        for (const auto &[k, n] : h)
                            t.rows.push_back({ chain, start, k, std::to_string(n) });
                    }
                }
            }
            return fed;
        }
    }

    std::vector<table> build_tables(std::span<const processor_result> results, const std::set<std::string, std::less<>> &only)
    {
        for (const auto &name : only) {
            const auto &all = schemas();
            if (std::none_of(all.begin(), all.end(), [&](const table_schema &s) { return s.name == name; }))
                throw config_error("unknown export table '" + name + "'");
        }
        // stable order independent of directory listing
        std::vector<processor_result> sorted { results.begin(), results.end() };
        std::stable_sort(sorted.begin(), sorted.end(), [](const processor_result &a, const processor_result &b) {
            return std::tie(a.chain, a.name) < std::tie(b.chain, b.name);
        });
        std::vector<table> out;
        for (const auto &s : schemas()) {
            if (!only.empty() && !only.contains(s.name))
                continue;
            table t;
            t.name = std::string { s.name };
            t.columns.assign(s.columns.begin(), s.columns.end());
            if (fill(t, sorted))
                out.push_back(std::move(t));
            else if (!only.empty())
                throw missing_result("no result feeds table '" + t.name + "'");
        }
        if (out.empty())
            throw missing_result("no result feeds any export table");
        return out;
    }

    std::string table_to_csv(const table &t)
    {
        std::string out;
        auto row = [&](const std::vector<std::string> &cells) {
            for (size_t i = 0; i < cells.size(); ++i) {
                if (i)
                    out += ',';
                out += pipeline::csv_field(cells[i]);
            }
            out += '\n';
        };
        row(t.columns);
        for (const auto &r : t.rows)
            row(r);
        return out;
    }

    std::string table_to_json(const table &t)
    {
        auto rows = nlohmann::ordered_json::array();
        for (const auto &r : t.rows) {
            nlohmann::ordered_json obj;
            for (size_t i = 0; i < t.columns.size() && i < r.size(); ++i)
                obj[t.columns[i]] = r[i];
            rows.push_back(std::move(obj));
        }
        nlohmann::ordered_json doc;
        doc[t.name] = std::move(rows);
        return doc.dump(2) + "\n";
    }
}
