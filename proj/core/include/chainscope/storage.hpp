#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>
#include <chainscope/error.hpp>
#include <chainscope/model.hpp>

namespace chainscope::storage {
    inline constexpr std::uint64_t default_chunk_size = 10000;
    inline constexpr int gzip_level = 6;

    struct archive_chunk {
        std::filesystem::path path;
        chain_id chain = chain_id::eosio;
        std::uint64_t first_height = 0;
        std::uint64_t last_height = 0;
        // lines actually present; equals last - first + 1 for a complete chunk
        std::uint64_t line_count = 0;

        height_range range() const noexcept { return { first_height, last_height }; }
    };

    struct raw_block_line {
        std::uint64_t height = 0;
        std::string line;
    };

    // "<chain>_blocks-<first>-<last>.jsonl.gz"
    std::string chunk_file_name(chain_id chain, std::uint64_t first, std::uint64_t last);
    // Recovers chain and height range from a chunk file name; line_count is set to the nominal size.
    std::optional<archive_chunk> parse_chunk_name(const std::filesystem::path &path);

    // Writes a gzip (level 6) JSON Lines chunk atomically via a temporary file and rename.
    // Lines must be sorted by height and contiguous; otherwise throws non_contiguous.
    archive_chunk write_chunk(chain_id chain, std::span<const raw_block_line> blocks, const std::filesystem::path &path);

    // Streaming reader over one gzip JSON Lines file. Corrupt streams throw io_error.
    class line_reader {
    public:
        explicit line_reader(const std::filesystem::path &path);
        ~line_reader();
        line_reader(const line_reader &) = delete;
        line_reader &operator=(const line_reader &) = delete;

        // false at end of stream
        bool next(std::string &line);
    private:
        struct impl;
        std::unique_ptr<impl> impl_;
    };

    std::vector<std::string> read_chunk_lines(const std::filesystem::path &path);

    struct archive_pattern {
        std::string glob;
        std::uint64_t start = 0;
        std::uint64_t end = 0;
    };

    // Chunk files matching the glob whose ranges overlap [start, end], sorted by first height.
    // All matches must belong to one chain.
    std::vector<archive_chunk> resolve(const archive_pattern &pattern);

    // Height ranges in [start, end] not covered by any chunk name.
    std::vector<height_range> name_gaps(std::span<const archive_chunk> chunks, std::uint64_t start, std::uint64_t end);

    using line_sink = std::function<void(std::uint64_t height, std::string_view line)>;

    // Yields every stored line with height in [start, end]. Lines of one chunk arrive in ascending
    // height order from a single worker; across chunks the order is unspecified. With workers > 1
    // the sink is called concurrently and must be thread-safe.
    // Throws missing_chunk when no chunk file covers part of the range, unless allow_gaps is set.
    // Lines missing inside an existing chunk are skipped silently; check_integrity reports them.
    std::uint64_t scan(const archive_pattern &pattern, const line_sink &sink, unsigned workers = 1, bool allow_gaps = false);

    enum class integrity_mode { names_only, full };

    struct integrity_report {
        std::vector<height_range> missing;
        std::uint64_t present = 0;
        std::vector<archive_chunk> chunks;

        bool complete() const noexcept { return missing.empty(); }
    };

    // Missing height ranges within [start, end]. A height stored more than once throws duplicate_height
    // listing every duplicated height. Full mode reads every line; names_only trusts file names.
    integrity_report check_integrity(const archive_pattern &pattern, integrity_mode mode = integrity_mode::full);

    // Appends chunks for one chain to a directory. Holds an advisory lock on the directory for its lifetime.
    class archive_writer {
    public:
        archive_writer(std::filesystem::path dir, chain_id chain, std::uint64_t chunk_size = default_chunk_size);
        ~archive_writer();
        archive_writer(const archive_writer &) = delete;
        archive_writer &operator=(const archive_writer &) = delete;

        const std::filesystem::path &dir() const noexcept { return dir_; }
        chain_id chain() const noexcept { return chain_; }
        std::uint64_t chunk_size() const noexcept { return chunk_size_; }
        std::string glob() const;

        // Heights in [start, end] not yet covered by chunk files in the directory.
        std::vector<height_range> missing(std::uint64_t start, std::uint64_t end) const;
        archive_chunk write(std::span<const raw_block_line> contiguous);
    private:
        std::filesystem::path dir_;
        chain_id chain_;
        std::uint64_t chunk_size_;
        int lock_fd_ = -1;
    };
}
