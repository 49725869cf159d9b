#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>
#include <chainscope/pipeline.hpp>

namespace chainscope::tables {
    struct table {
        std::string name;
        std::vector<std::string> columns;
        std::vector<std::vector<std::string>> rows;

        bool operator==(const table &) const = default;
    };

    // Every export table with its column contract, in output order.
    struct table_schema {
        std::string_view name;
        std::vector<std::string_view> columns;
    };
    const std::vector<table_schema> &schemas();

    // Result documents (<Name>.json) of a process run; manifest.json is skipped.
    // Throws missing_result when the directory holds no result.
    std::vector<pipeline::processor_result> load_results(const std::filesystem::path &dir);

    // Builds the requested tables (all known tables when `only` is empty). A table with no source result
    // is left out, unless it was requested explicitly, which throws missing_result.
    std::vector<table> build_tables(std::span<const pipeline::processor_result> results,
        const std::set<std::string, std::less<>> &only = {});

    std::string table_to_csv(const table &t);
    // {"<name>": [{"column": value, ...}, ...], ...}
    std::string table_to_json(const table &t);
}
