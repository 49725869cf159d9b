#include <chainscope/adapters/adapter.hpp>
#include <chainscope/storage.hpp>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>
#include <fcntl.h>
#include <glob.h>
#include <sys/file.h>
#include <unistd.h>
#include <zlib.h>

namespace chainscope::storage {
    namespace fs = std::filesystem;

    namespace {
        constexpr std::string_view chunk_infix = "_blocks-";
        constexpr std::string_view chunk_suffix = ".jsonl.gz";
        constexpr size_t io_buffer_size = 1 << 18;

        bool parse_u64(std::string_view s, std::uint64_t &out)
        {
            if (s.empty() || s.size() > 20)
                return false;
            out = 0;
            for (const char c : s) {
                if (c < '0' || c > '9')
                    return false;
                out = out * 10 + static_cast<std::uint64_t>(c - '0');
            }
            return true;
        }

        class gzip_file_writer {
        public:
            explicit gzip_file_writer(const fs::path &path)
                : out_ { path, std::ios::binary | std::ios::trunc }, path_ { path }
            {
                if (!out_)
                    throw io_error("cannot create " + path.string());
                std::memset(&zs_, 0, sizeof(zs_));
                // windowBits 15 + 16 selects the gzip wrapper; the header carries mtime 0
                if (deflateInit2(&zs_, gzip_level, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
                    throw io_error("deflateInit2 failed for " + path.string());
                buf_.resize(io_buffer_size);
            }

            ~gzip_file_writer()
            {
                deflateEnd(&zs_);
            }

            void write(std::string_view data)
            {
                zs_.next_in = reinterpret_cast<Bytef *>(const_cast<char *>(data.data()));
                zs_.avail_in = static_cast<uInt>(data.size());
                pump(Z_NO_FLUSH);
            }

            void finish()
            {
                zs_.next_in = nullptr;
                zs_.avail_in = 0;
                pump(Z_FINISH);
                out_.flush();
                if (!out_)
                    throw io_error("write failed for " + path_.string());
                out_.close();
            }
        private:
            void pump(int flush)
            {
                for (;;) {
                    zs_.next_out = reinterpret_cast<Bytef *>(buf_.data());
                    zs_.avail_out = static_cast<uInt>(buf_.size());
                    const int rc = deflate(&zs_, flush);
                    if (rc == Z_STREAM_ERROR)
                        throw io_error("deflate failed for " + path_.string());
                    const auto produced = buf_.size() - zs_.avail_out;
                    out_.write(buf_.data(), static_cast<std::streamsize>(produced));
                    if (flush == Z_FINISH ? rc == Z_STREAM_END : (zs_.avail_out != 0 && zs_.avail_in == 0))
                        break;
                }
            }

            std::ofstream out_;
            fs::path path_;
            z_stream zs_;
            std::string buf_;
        };

        std::vector<std::string> expand_glob(const std::string &pattern)
        {
            glob_t g {};
            const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
            std::vector<std::string> out;
            if (rc == 0) {
                for (size_t i = 0; i < g.gl_pathc; ++i)
                    out.emplace_back(g.gl_pathv[i]);
            }
            globfree(&g);
            if (rc != 0 && rc != GLOB_NOMATCH)
                throw io_error("glob failed for " + pattern);
            return out;
        }

        // Heights of the lines in one chunk: positional when the chunk is complete, probed otherwise.
        std::vector<std::uint64_t> line_heights(const archive_chunk &c, const std::vector<std::string> &lines)
        {
            std::vector<std::uint64_t> heights;
            heights.reserve(lines.size());
            if (lines.size() == c.last_height - c.first_height + 1) {
                for (size_t i = 0; i < lines.size(); ++i)
                    heights.push_back(c.first_height + i);
            } else {
                for (const auto &l : lines)
                    heights.push_back(adapters::probe_height(c.chain, l));
            }
            return heights;
        }
    }

    struct line_reader::impl {
        std::ifstream in;
        fs::path path;
        z_stream zs {};
        std::string in_buf;
        std::string out_buf;
        size_t out_pos = 0;
        bool stream_done = false;
        bool input_eof = false;
        bool any_input = false;

        explicit impl(const fs::path &p)
            : in { p, std::ios::binary }, path { p }
        {
            if (!in)
                throw io_error("cannot open " + p.string());
            std::memset(&zs, 0, sizeof(zs));
            if (inflateInit2(&zs, 15 + 32) != Z_OK)
                throw io_error("inflateInit2 failed for " + p.string());
            in_buf.resize(io_buffer_size);
        }

        ~impl()
        {
            inflateEnd(&zs);
        }

        // appends more decompressed bytes to out_buf; false when exhausted
        bool fill()
        {
            while (!stream_done) {
                if (zs.avail_in == 0 && !input_eof) {
                    in.read(in_buf.data(), static_cast<std::streamsize>(in_buf.size()));
                    const auto got = in.gcount();
                    if (got <= 0) {
                        input_eof = true;
                    } else {
                        any_input = true;
                        zs.next_in = reinterpret_cast<Bytef *>(in_buf.data());
                        zs.avail_in = static_cast<uInt>(got);
                    }
                }
                if (zs.avail_in == 0 && input_eof) {
                    if (!any_input)
                        throw io_error("empty chunk file " + path.string());
                    throw io_error("truncated gzip stream in " + path.string());
                }
                const auto before = out_buf.size();
                out_buf.resize(before + io_buffer_size);
                zs.next_out = reinterpret_cast<Bytef *>(out_buf.data() + before);
                zs.avail_out = static_cast<uInt>(io_buffer_size);
                const int rc = inflate(&zs, Z_NO_FLUSH);
                out_buf.resize(before + io_buffer_size - zs.avail_out);
                if (rc == Z_STREAM_END) {
                    // concatenated gzip members are a valid RFC 1952 stream
                    if (zs.avail_in == 0) {
                        in.peek();
                        if (in.eof())
                            stream_done = true;
                    }
                    if (!stream_done)
                        inflateReset(&zs);
                } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
                    throw io_error("corrupt gzip stream in " + path.string() + ": " + (zs.msg ? zs.msg : "inflate error"));
                }
                if (out_buf.size() > before)
                    return true;
            }
            return false;
        }
    };

    line_reader::line_reader(const fs::path &path)
        : impl_ { std::make_unique<impl>(path) }
    {
    }

    line_reader::~line_reader() = default;

    bool line_reader::next(std::string &line)
    {
        auto &s = *impl_;
        for (;;) {
            const auto nl = s.out_buf.find('\n', s.out_pos);
            if (nl != std::string::npos) {
                line.assign(s.out_buf, s.out_pos, nl - s.out_pos);
                s.out_pos = nl + 1;
                return true;
            }
            if (s.out_pos > 0) {
                s.out_buf.erase(0, s.out_pos);
                s.out_pos = 0;
            }
            if (!s.fill()) {
                if (s.out_buf.empty())
                    return false;
                // final line without terminator
                line = std::move(s.out_buf);
                s.out_buf.clear();
                return true;
            }
        }
    }

    std::vector<std::string> read_chunk_lines(const fs::path &path)
    {
        line_reader r { path };
        std::vector<std::string> lines;
        std::string line;
        while (r.next(line))
            lines.push_back(line);
        return lines;
    }

    std::string chunk_file_name(chain_id chain, std::uint64_t first, std::uint64_t last)
    {
        return std::string { chain_token(chain) } + std::string { chunk_infix } + std::to_string(first) + "-" + std::to_string(last)
            + std::string { chunk_suffix };
    }

    std::optional<archive_chunk> parse_chunk_name(const fs::path &path)
    {
        const std::string name = path.filename().string();
        const std::string_view v { name };
        if (v.size() <= chunk_suffix.size() || v.substr(v.size() - chunk_suffix.size()) != chunk_suffix)
            return std::nullopt;
        const auto infix = v.find(chunk_infix);
        if (infix == std::string_view::npos)
            return std::nullopt;
        const auto chain = parse_chain(v.substr(0, infix));
        if (!chain)
            return std::nullopt;
        const auto range = v.substr(infix + chunk_infix.size(), v.size() - chunk_suffix.size() - infix - chunk_infix.size());
        const auto dash = range.find('-');
        archive_chunk c;
        if (dash == std::string_view::npos || !parse_u64(range.substr(0, dash), c.first_height)
                || !parse_u64(range.substr(dash + 1), c.last_height) || c.last_height < c.first_height)
            return std::nullopt;
        c.path = path;
        c.chain = *chain;
        c.line_count = c.last_height - c.first_height + 1;
        return c;
    }

    archive_chunk write_chunk(chain_id chain, std::span<const raw_block_line> blocks, const fs::path &path)
    {
        if (blocks.empty())
            throw non_contiguous("cannot write an empty chunk");
        for (size_t i = 1; i < blocks.size(); ++i) {
            if (blocks[i].height != blocks[i - 1].height + 1)
                throw non_contiguous("heights " + std::to_string(blocks[i - 1].height) + " and " + std::to_string(blocks[i].height)
                    + " are not contiguous");
        }
        for (const auto &b : blocks) {
            if (b.line.find('\n') != std::string::npos)
                throw io_error("block " + std::to_string(b.height) + " spans several lines");
        }
        auto tmp = path;
        tmp += ".tmp";
        {
            gzip_file_writer w { tmp };
            for (const auto &b : blocks) {
                w.write(b.line);
                w.write("\n");
            }
            w.finish();
        }
        std::error_code ec;
        fs::rename(tmp, path, ec);
        if (ec) {
            fs::remove(tmp, ec);
            throw io_error("cannot rename chunk into place: " + path.string());
        }
        return { path, chain, blocks.front().height, blocks.back().height, blocks.size() };
    }

    std::vector<archive_chunk> resolve(const archive_pattern &pattern)
    {
        if (pattern.end < pattern.start)
            throw config_error("archive range end " + std::to_string(pattern.end) + " precedes start " + std::to_string(pattern.start));
        std::vector<archive_chunk> chunks;
        for (const auto &p : expand_glob(pattern.glob)) {
            auto c = parse_chunk_name(p);
            if (!c)
                continue;
            if (c->last_height < pattern.start || c->first_height > pattern.end)
                continue;
            if (!chunks.empty() && chunks.front().chain != c->chain)
                throw config_error("pattern " + pattern.glob + " matches chunks of several chains");
            chunks.push_back(std::move(*c));
        }
        std::sort(chunks.begin(), chunks.end(), [](const auto &a, const auto &b) {
            return a.first_height != b.first_height ? a.first_height < b.first_height : a.last_height < b.last_height;
        });
        return chunks;
    }

    std::vector<height_range> name_gaps(std::span<const archive_chunk> chunks, std::uint64_t start, std::uint64_t end)
    {
        std::vector<height_range> gaps;
        std::uint64_t next = start;
        bool done = false;
        for (const auto &c : chunks) {
            if (done || c.last_height < next)
                continue;
            if (c.first_height > next)
                gaps.push_back({ next, std::min(c.first_height - 1, end) });
            if (c.last_height >= end) {
                done = true;
                continue;
            }
            next = std::max(next, c.last_height + 1);
        }
        if (!done && next <= end)
            gaps.push_back({ next, end });
        std::erase_if(gaps, [&](const auto &g) { return g.first > end; });
        return gaps;
    }

    std::uint64_t scan(const archive_pattern &pattern, const line_sink &sink, unsigned workers, bool allow_gaps)
    {
        const auto chunks = resolve(pattern);
        if (!allow_gaps) {
            if (auto gaps = name_gaps(chunks, pattern.start, pattern.end); !gaps.empty())
                throw missing_chunk(std::move(gaps));
        }
        std::atomic<size_t> next_chunk { 0 };
        std::atomic<std::uint64_t> yielded { 0 };
        std::mutex err_mutex;
        std::exception_ptr first_error;
        auto work = [&] {
            for (;;) {
                const auto i = next_chunk.fetch_add(1);
                if (i >= chunks.size())
                    return;
                {
                    std::lock_guard lock { err_mutex };
                    if (first_error)
                        return;
                }
                try {
                    const auto &c = chunks[i];
                    const auto lines = read_chunk_lines(c.path);
                    const auto heights = line_heights(c, lines);
                    for (size_t j = 0; j < lines.size(); ++j) {
                        if (heights[j] < pattern.start || heights[j] > pattern.end)
                            continue;
                        sink(heights[j], lines[j]);
                        yielded.fetch_add(1, std::memory_order_relaxed);
                    }
                } catch (...) {
                    std::lock_guard lock { err_mutex };
                    if (!first_error)
                        first_error = std::current_exception();
                }
            }
        };
        workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<size_t>(1, chunks.size()))));
        if (workers == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back(work);
        }
        if (first_error)
            std::rethrow_exception(first_error);
        return yielded.load();
    }

    integrity_report check_integrity(const archive_pattern &pattern, integrity_mode mode)
    {
        integrity_report report;
        report.chunks = resolve(pattern);
        const auto span_size = pattern.end - pattern.start + 1;
        std::vector<bool> seen(span_size, false);
        std::vector<std::uint64_t> duplicates;
        auto mark = [&](std::uint64_t h) {
            if (h < pattern.start || h > pattern.end)
                return;
            auto ref = seen[h - pattern.start];
            if (ref) {
                duplicates.push_back(h);
            } else {
                ref = true;
                ++report.present;
            }
        };
        for (auto &c : report.chunks) {
            if (mode == integrity_mode::names_only) {
                for (auto h = std::max(c.first_height, pattern.start); h <= std::min(c.last_height, pattern.end); ++h)
                    mark(h);
                continue;
            }
            const auto lines = read_chunk_lines(c.path);
            c.line_count = lines.size();
            for (const auto &l : lines) {
                const auto h = adapters::probe_height(c.chain, l);
                if (h < c.first_height || h > c.last_height)
                    throw malformed_block("height " + std::to_string(h) + " stored in chunk " + c.path.filename().string());
                mark(h);
            }
        }
        if (!duplicates.empty()) {
            std::sort(duplicates.begin(), duplicates.end());
            duplicates.erase(std::unique(duplicates.begin(), duplicates.end()), duplicates.end());
            throw duplicate_height(std::move(duplicates));
        }
        for (std::uint64_t i = 0; i < span_size;) {
            if (seen[i]) {
                ++i;
                continue;
            }
            const auto first = i;
            while (i < span_size && !seen[i])
                ++i;
            report.missing.push_back({ pattern.start + first, pattern.start + i - 1 });
        }
        return report;
    }

    archive_writer::archive_writer(fs::path dir, chain_id chain, std::uint64_t chunk_size)
        : dir_ { std::move(dir) }, chain_ { chain }, chunk_size_ { chunk_size }
    {
        if (chunk_size_ == 0)
            throw config_error("chunk size must be positive");
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec)
            throw io_error("cannot create archive directory " + dir_.string());
        const auto lock_path = dir_ / ("." + std::string { chain_token(chain_) } + "_blocks.lock");
        lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (lock_fd_ < 0)
            throw io_error("cannot open lock file " + lock_path.string());
        if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(lock_fd_);
            lock_fd_ = -1;
            throw io_error("archive " + dir_.string() + " is locked by another writer");
        }
    }

    archive_writer::~archive_writer()
    {
        if (lock_fd_ >= 0) {
            ::flock(lock_fd_, LOCK_UN);
            ::close(lock_fd_);
        }
    }

    std::string archive_writer::glob() const
    {
        return (dir_ / (std::string { chain_token(chain_) } + std::string { chunk_infix } + "*" + std::string { chunk_suffix })).string();
    }

    std::vector<height_range> archive_writer::missing(std::uint64_t start, std::uint64_t end) const
    {
        const auto chunks = resolve({ glob(), start, end });
        return name_gaps(chunks, start, end);
    }

    archive_chunk archive_writer::write(std::span<const raw_block_line> contiguous)
    {
        if (contiguous.empty())
            throw non_contiguous("cannot write an empty chunk");
        const auto path = dir_ / chunk_file_name(chain_, contiguous.front().height, contiguous.back().height);
        return write_chunk(chain_, contiguous, path);
    }
}
