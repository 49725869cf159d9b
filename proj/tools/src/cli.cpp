#include "cli.hpp"

#include <chainscope/error.hpp>
#include <chainscope/export.hpp>
#include <chainscope/fetch.hpp>
#include <chainscope/hash.hpp>
#include <chainscope/pipeline.hpp>
#include <chainscope/storage.hpp>
#include <chainscope/version.hpp>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <thread>
#include <nlohmann/json.hpp>

namespace chainscope::cli {
    namespace fs = std::filesystem;
    using json = nlohmann::ordered_json;

    exit_code exit_code_for(const std::exception_ptr &ex) noexcept
    {
        try {
            std::rethrow_exception(ex);
        } catch (const config_error &) {
            return config_failure;
        } catch (const missing_result &) {
            return config_failure;
        } catch (const cyclic_parentage &) {
            return config_failure;
        } catch (const endpoint_unavailable &) {
            return network_failure;
        } catch (const missing_chunk &) {
            return integrity_failure;
        } catch (const duplicate_height &) {
            return integrity_failure;
        } catch (const malformed_block &) {
            return integrity_failure;
        } catch (const chain_mismatch &) {
            return integrity_failure;
        } catch (const non_contiguous &) {
            return integrity_failure;
        } catch (const io_error &) {
            return integrity_failure;
        } catch (...) {
            return internal_failure;
        }
    }

    std::string endpoint_variable(chain_id chain)
    {
        std::string token { chain_token(chain) };
        std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) { return std::toupper(c); });
        return "CHAINSCOPE_ENDPOINT_" + token;
    }

    std::optional<std::string> endpoint_from_environment(chain_id chain)
    {
        const char *v = std::getenv(endpoint_variable(chain).c_str());
        if (v == nullptr || *v == '\0')
            return std::nullopt;
        return std::string { v };
    }

    namespace {
        void write_file(const fs::path &path, std::string_view text)
        {
            const auto tmp = fs::path { path.string() + ".tmp" };
            {
                std::ofstream out { tmp, std::ios::binary | std::ios::trunc };
                if (!out)
                    throw io_error("cannot write " + tmp.string());
                out.write(text.data(), static_cast<std::streamsize>(text.size()));
                if (!out)
                    throw io_error("cannot write " + tmp.string());
            }
            fs::rename(tmp, path);
        }

        std::string read_file(const fs::path &path)
        {
            std::ifstream in { path, std::ios::binary };
            if (!in)
                throw config_error("cannot open " + path.string());
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        std::string ranges_text(const std::vector<height_range> &ranges, size_t cap = 20)
        {
            std::string out;
            for (size_t i = 0; i < ranges.size() && i < cap; ++i) {
                if (!out.empty())
                    out += ", ";
                out += ranges[i].first == ranges[i].last ? std::to_string(ranges[i].first)
                                                         : std::to_string(ranges[i].first) + "-" + std::to_string(ranges[i].last);
            }
            if (ranges.size() > cap)
                out += ", ... (" + std::to_string(ranges.size()) + " ranges)";
            return out;
        }

        unsigned default_workers()
        {
            return std::max(1u, std::thread::hardware_concurrency());
        }

        chain_id chain_option(const std::string &text)
        {
            const auto c = parse_chain(text);
            if (!c)
                throw config_error("unknown chain '" + text + "' (expected eos, tezos or xrp)");
            return *c;
        }

        // ---- fetch ----

        struct fetch_args {
            std::string chain;
            std::string endpoint;
            std::uint64_t start = 0;
            std::uint64_t end = 0;
            std::string out_dir;
            std::uint64_t chunk_size = storage::default_chunk_size;
            std::string rate = "10";
            unsigned retries = 5;
            unsigned timeout = 30;
            unsigned backoff_ms = 500;
            std::uint64_t seed = 0;
        };

        int cmd_fetch(const fetch_args &a, std::ostream &out)
        {
            const auto chain = chain_option(a.chain);
            auto url = a.endpoint;
            if (url.empty()) {
                const auto env = endpoint_from_environment(chain);
                if (!env)
                    throw config_error("no endpoint: pass --endpoint or set " + endpoint_variable(chain));
                url = *env;
            }
            auto spec = fetch::default_endpoint(chain, url);
            if (!decimal::try_parse(a.rate, spec.rate_limit))
                throw config_error("--rate must be a number");
            spec.max_retries = a.retries;
            spec.timeout = std::chrono::seconds { a.timeout };
            spec.backoff.base = std::chrono::milliseconds { a.backoff_ms };
            spec.jitter_seed = a.seed;
            fetch::validate(spec);
            if (a.chunk_size == 0)
                throw config_error("--chunk-size must be positive");
            if (a.start > a.end)
                throw config_error("--start exceeds --end");
            fs::create_directories(a.out_dir);
            storage::archive_writer archive { a.out_dir, chain, a.chunk_size };
            const auto summary = fetch::fetch_blocks(spec, a.start, a.end, archive);
            out << "fetched " << summary.fetched << " blocks into " << summary.written.size() << " chunks from " << url << "\n";
            for (const auto &c : summary.written)
                out << "  " << c.path.filename().string() << "\n";
            if (!summary.failures.empty()) {
                out << "failed heights (" << summary.failures.size() << "):";
                for (size_t i = 0; i < summary.failures.size() && i < 50; ++i)
                    out << " " << summary.failures[i];
                out << "\nrerun the same command to resume\n";
                return integrity_failure;
            }
            return success;
        }

        // ---- check ----

        struct check_args {
            std::string config;
            std::string pattern;
            std::uint64_t start = 0;
            std::uint64_t end = 0;
            bool names_only = false;
        };

        int cmd_check(const check_args &a, std::ostream &out)
        {
            storage::archive_pattern pattern;
            if (!a.config.empty()) {
                const auto cfg = pipeline::load_config(a.config);
                pattern = { cfg.pattern, cfg.start_block, cfg.end_block };
            } else {
                if (a.pattern.empty())
                    throw config_error("check needs --config or --pattern with --start and --end");
                pattern = { a.pattern, a.start, a.end };
            }
            if (pattern.start > pattern.end)
                throw config_error("start exceeds end");
            const auto report = storage::check_integrity(pattern,
                a.names_only ? storage::integrity_mode::names_only : storage::integrity_mode::full);
            out << "chunks " << report.chunks.size() << ", heights present " << report.present << " of "
                << (pattern.end - pattern.start + 1) << "\n";
            if (report.complete()) {
                out << "archive complete for " << pattern.start << "-" << pattern.end << "\n";
                return success;
            }
            out << "missing: " << ranges_text(report.missing) << "\n";
            return integrity_failure;
        }

        // ---- process ----

        struct process_args {
            std::string config;
            std::string out_dir;
            unsigned workers = 0;
            bool strict = false;
            bool allow_gaps = false;
        };

        int cmd_process(const process_args &a, std::ostream &out)
        {
            if (a.strict && a.allow_gaps)
                throw config_error("--strict and --allow-gaps exclude each other");
            const auto config_text = read_file(a.config);
            const auto cfg = pipeline::parse_config(config_text, fs::path { a.config }.parent_path());
            const auto ctx = pipeline::make_context(cfg);
            const auto workers = a.workers == 0 ? default_workers() : a.workers;
            pipeline::run_options opts;
            opts.workers = workers;
            opts.on_malformed = a.strict ? pipeline::malformed_policy::abort : pipeline::malformed_policy::skip;
            opts.allow_gaps = a.allow_gaps;
            const storage::archive_pattern pattern { cfg.pattern, cfg.start_block, cfg.end_block };

            const auto started = std::chrono::system_clock::now();
            const auto t0 = std::chrono::steady_clock::now();
            const auto summary = pipeline::run_pipeline(cfg.processors, pattern, ctx, opts);
            const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            const fs::path dir = !a.out_dir.empty() ? fs::path { a.out_dir } : cfg.output_dir.value_or(fs::path { "results" });
            fs::create_directories(dir);
            auto outputs = json::array();
            for (const auto &r : summary.results) {
                const auto json_text = pipeline::result_to_json(r);
                const auto csv_text = pipeline::result_to_csv(r);
                write_file(dir / (r.name + ".json"), json_text);
                write_file(dir / (r.name + ".csv"), csv_text);
                outputs.push_back({ { "name", r.name }, { "type", r.type }, { "json", r.name + ".json" },
                    { "json_sha256", sha256_hex(json_text) }, { "csv", r.name + ".csv" }, { "csv_sha256", sha256_hex(csv_text) } });
            }

            json manifest;
            manifest["tool"] = "chainscope";
            manifest["version"] = std::string { version() };
            manifest["config"] = fs::absolute(a.config).lexically_normal().string();
            manifest["config_sha256"] = sha256_hex(config_text);
            manifest["chain"] = chain_token(ctx->chain);
            manifest["pattern"] = cfg.pattern;
            manifest["start_block"] = cfg.start_block;
            manifest["end_block"] = cfg.end_block;
            manifest["workers"] = workers;
            manifest["strict"] = a.strict;
            manifest["allow_gaps"] = a.allow_gaps;
            manifest["chunks"] = summary.chunks;
            manifest["lines_read"] = summary.lines_read;
            manifest["blocks"] = summary.blocks;
            manifest["skipped_lines"] = summary.skipped_lines;
            auto samples = json::array();
            for (const auto &s : summary.skipped_samples)
                samples.push_back({ { "chunk", s.chunk }, { "line", s.line_number }, { "reason", s.reason } });
            manifest["skipped_samples"] = std::move(samples);
            auto gaps = json::array();
            for (const auto &g : summary.gaps)
                gaps.push_back({ g.first, g.last });
            manifest["gaps"] = std::move(gaps);
            manifest["window_alignment"] = "epoch";
            manifest["average_mode"] = ctx->observation_start ? "calendar" : "block_span";
            manifest["started_at"] = format_utc(std::chrono::floor<std::chrono::seconds>(started));
            manifest["duration_seconds"] = elapsed;
            manifest["outputs"] = std::move(outputs);
            write_file(dir / "manifest.json", manifest.dump(2) + "\n");

            out << "processed " << summary.blocks << " blocks from " << summary.chunks << " chunks with " << workers
                << " workers in " << elapsed << " s\n";
            if (summary.skipped_lines > 0)
                out << "skipped " << summary.skipped_lines << " malformed lines\n";
            if (!summary.gaps.empty())
                out << "gaps allowed: " << ranges_text(summary.gaps) << "\n";
            for (const auto &r : summary.results)
                out << "  " << (dir / (r.name + ".json")).string() << "\n";
            return success;
        }

        // ---- export ----

        struct export_args {
            std::vector<std::string> dirs;
            std::string out_dir;
            std::string format = "csv";
            std::vector<std::string> tables;
        };

        int cmd_export(const export_args &a, std::ostream &out)
        {
            std::vector<pipeline::processor_result> results;
            for (const auto &d : a.dirs) {
                auto part = tables::load_results(d);
                results.insert(results.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
            }
            const std::set<std::string, std::less<>> only { a.tables.begin(), a.tables.end() };
            const auto built = tables::build_tables(results, only);
            fs::create_directories(a.out_dir);
            for (const auto &t : built) {
                const auto path = fs::path { a.out_dir } / (t.name + "." + a.format);
                write_file(path, a.format == "json" ? tables::table_to_json(t) : tables::table_to_csv(t));
                out << path.string() << " (" << t.rows.size() << " rows)\n";
            }
            return success;
        }
    }

    int run(std::span<const std::string> args, std::ostream &out, std::ostream &err)
    {
        CLI::App app { "Multi-chain block archive and transaction analytics", "chainscope" };
        app.set_version_flag("--version", std::string { version() });
        app.require_subcommand(1);

        fetch_args fa;
        auto *fetch_cmd = app.add_subcommand("fetch", "Download a height range into a chunked archive (resumable)");
        fetch_cmd->add_option("--chain", fa.chain, "eos, tezos or xrp")->required();
        fetch_cmd->add_option("--endpoint", fa.endpoint, "node URL; defaults to CHAINSCOPE_ENDPOINT_<CHAIN>");
        fetch_cmd->add_option("--start", fa.start, "first height")->required();
        fetch_cmd->add_option("--end", fa.end, "last height")->required();
        fetch_cmd->add_option("--out", fa.out_dir, "archive directory")->required();
        fetch_cmd->add_option("--chunk-size", fa.chunk_size, "blocks per chunk file")->capture_default_str();
        fetch_cmd->add_option("--rate", fa.rate, "requests per second")->capture_default_str();
        fetch_cmd->add_option("--retries", fa.retries, "retries per height")->capture_default_str();
        fetch_cmd->add_option("--timeout", fa.timeout, "request timeout in seconds")->capture_default_str();
        fetch_cmd->add_option("--backoff-ms", fa.backoff_ms, "first retry delay")->capture_default_str();
        fetch_cmd->add_option("--seed", fa.seed, "jitter seed")->capture_default_str();

        check_args ca;
        auto *check_cmd = app.add_subcommand("check", "Report missing and duplicated heights in an archive");
        check_cmd->add_option("--config", ca.config, "take pattern and range from a pipeline config");
        check_cmd->add_option("--pattern", ca.pattern, "chunk glob");
        check_cmd->add_option("--start", ca.start, "first height");
        check_cmd->add_option("--end", ca.end, "last height");
        check_cmd->add_flag("--names-only", ca.names_only, "trust chunk file names instead of reading every line");

        process_args pa;
        auto *process_cmd = app.add_subcommand("process", "Run the processors of a pipeline config over an archive");
        process_cmd->add_option("config", pa.config, "pipeline config (JSON)")->required();
        process_cmd->add_option("--out", pa.out_dir, "results directory (default: OutputDir or ./results)");
        process_cmd->add_option("--workers", pa.workers, "worker threads (default: available cores)");
        process_cmd->add_flag("--strict", pa.strict, "abort on malformed lines");
        process_cmd->add_flag("--allow-gaps", pa.allow_gaps, "process despite missing chunks");

        export_args ea;
        auto *export_cmd = app.add_subcommand("export", "Turn process results into table CSV or JSON files");
        export_cmd->add_option("results", ea.dirs, "results directories")->required();
        export_cmd->add_option("--out", ea.out_dir, "output directory")->required();
        export_cmd->add_option("--format", ea.format, "csv or json")->check(CLI::IsMember({ "csv", "json" }))->capture_default_str();
        export_cmd->add_option("--tables", ea.tables, "subset of tables")->delimiter(',');

        std::vector<std::string> storage { "chainscope" };
        storage.insert(storage.end(), args.begin(), args.end());
        std::vector<char *> argv;
        for (auto &s : storage)
            argv.push_back(s.data());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError &ex) {
            const auto code = app.exit(ex, out, err);
            return code == 0 ? success : config_failure;
        }

        try {
            if (fetch_cmd->parsed())
                return cmd_fetch(fa, out);
            if (check_cmd->parsed())
                return cmd_check(ca, out);
            if (process_cmd->parsed())
                return cmd_process(pa, out);
            return cmd_export(ea, out);
        } catch (const std::exception &ex) {
            err << "chainscope: " << ex.what() << "\n";
            return exit_code_for(std::current_exception());
        } catch (...) {
            err << "chainscope: unknown failure\n";
            return internal_failure;
        }
    }
}
