#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chainscope/adapters/adapter.hpp>
#include <chainscope/error.hpp>
#include <chainscope/fetch.hpp>

#include <algorithm>
#include <cmath>
#include <thread>
#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/ssl.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/ssl.hpp>
#include <boost/beast/websocket.hpp>
#include <boost/beast/websocket/ssl.hpp>
#include <rapidjson/document.h>

namespace chainscope::fetch {
    namespace net = boost::asio;
    namespace beast = boost::beast;
    namespace websocket = beast::websocket;
    using tcp = net::ip::tcp;

    std::string_view transport_name(transport t) noexcept
    {
        return t == transport::websocket ? "WEBSOCKET" : "HTTP_RPC";
    }

    std::chrono::milliseconds backoff_delay(const backoff_policy &p, unsigned attempt, std::mt19937_64 &rng)
    {
        const auto exponent = attempt == 0 ? 0u : attempt - 1;
        double ms = static_cast<double>(p.base.count()) * std::pow(p.factor, static_cast<double>(exponent));
        ms = std::min(ms, static_cast<double>(p.cap.count()));
        if (p.jitter > 0) {
            std::uniform_real_distribution<double> spread { 1.0 - p.jitter, 1.0 + p.jitter };
            ms *= spread(rng);
        }
        return std::chrono::milliseconds { static_cast<std::int64_t>(std::llround(std::max(ms, 0.0))) };
    }

    endpoint_spec default_endpoint(chain_id chain, std::string url)
    {
        endpoint_spec e;
        e.chain = chain;
        e.url = std::move(url);
        e.via = chain == chain_id::xrpl ? transport::websocket : transport::http_rpc;
        return e;
    }

    url_parts parse_url(std::string_view url)
    {
        url_parts out;
        const auto sep = url.find("://");
        if (sep == std::string_view::npos)
            throw config_error("endpoint URL '" + std::string { url } + "' has no scheme");
        out.scheme = std::string { url.substr(0, sep) };
        std::transform(out.scheme.begin(), out.scheme.end(), out.scheme.begin(), [](unsigned char c) { return std::tolower(c); });
        auto rest = url.substr(sep + 3);
        const auto slash = rest.find('/');
        auto authority = rest.substr(0, slash);
        out.path = slash == std::string_view::npos ? "" : std::string { rest.substr(slash) };
        while (!out.path.empty() && out.path.back() == '/')
            out.path.pop_back();
        if (!authority.empty() && authority.front() == '[') {
            const auto close = authority.find(']');
            if (close == std::string_view::npos)
                throw config_error("endpoint URL '" + std::string { url } + "' has a bad IPv6 host");
            out.host = std::string { authority.substr(1, close - 1) };
            authority = authority.substr(close + 1);
            if (!authority.empty() && authority.front() == ':')
                out.port = std::string { authority.substr(1) };
        } else {
            const auto colon = authority.rfind(':');
            out.host = std::string { authority.substr(0, colon) };
            if (colon != std::string_view::npos)
                out.port = std::string { authority.substr(colon + 1) };
        }
        if (out.host.empty())
            throw config_error("endpoint URL '" + std::string { url } + "' has no host");
        if (out.port.empty())
            out.port = (out.scheme == "https" || out.scheme == "wss") ? "443" : "80";
        if (!std::all_of(out.port.begin(), out.port.end(), [](char c) { return c >= '0' && c <= '9'; }))
            throw config_error("endpoint URL '" + std::string { url } + "' has a bad port");
        return out;
    }

    void validate(const endpoint_spec &e)
    {
        if (e.rate_limit.sign() <= 0)
            throw config_error("endpoint " + e.url + ": rate limit must be positive");
        const bool wants_ws = e.chain == chain_id::xrpl;
        if ((e.via == transport::websocket) != wants_ws)
            throw config_error("endpoint " + e.url + ": " + std::string { chain_name(e.chain) } + " is fetched over "
                + std::string { transport_name(wants_ws ? transport::websocket : transport::http_rpc) });
        const auto u = parse_url(e.url);
        const bool ok = wants_ws ? (u.scheme == "ws" || u.scheme == "wss") : (u.scheme == "http" || u.scheme == "https");
        if (!ok)
            throw config_error("endpoint " + e.url + ": unsupported scheme '" + u.scheme + "'");
        if (e.timeout.count() <= 0)
            throw config_error("endpoint " + e.url + ": timeout must be positive");
    }

    std::string to_line(std::string_view body)
    {
        if (body.find_first_of("\r\n") == std::string_view::npos)
            return std::string { body };
        std::string out;
        out.reserve(body.size());
        bool in_string = false;
        bool escaped = false;
        for (const char c : body) {
            if (in_string) {
                out += c;
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
                continue;
            if (c == '"')
                in_string = true;
            out += c;
        }
        return out;
    }

    namespace {
        class http_source: public block_source {
        public:
            explicit http_source(const endpoint_spec &e)
                : chain_ { e.chain }, url_ { parse_url(e.url) }, client_ { url_.scheme + "://" + url_.host + ":" + url_.port }
            {
                client_.set_connection_timeout(e.timeout);
                client_.set_read_timeout(e.timeout);
                client_.set_write_timeout(e.timeout);
                client_.set_keep_alive(true);
                client_.set_tcp_nodelay(true);
                client_.enable_server_certificate_verification(true);
            }

            response get(std::uint64_t height) override
            {
                const auto h = std::to_string(height);
                auto res = chain_ == chain_id::eosio
                    ? client_.Post(url_.path + "/v1/chain/get_block", "{\"block_num_or_id\":" + h + "}", "application/json")
                    : client_.Get(url_.path + "/chains/main/blocks/" + h);
                if (!res)
                    return { std::nullopt, true, httplib::to_string(res.error()) };
                if (res->status != 200)
                    return { std::nullopt, false, "HTTP " + std::to_string(res->status) };
                return { std::move(res->body), false, {} };
            }
        private:
            chain_id chain_;
            url_parts url_;
            httplib::Client client_;
        };

        // Synchronous facade over asynchronous Beast operations so every step honours the timeout.
        class ws_source: public block_source {
        public:
            explicit ws_source(const endpoint_spec &e)
                : url_ { parse_url(e.url) }, timeout_ { e.timeout }, secure_ { url_.scheme == "wss" }
            {
                tls_ctx_.set_default_verify_paths();
                tls_ctx_.set_verify_mode(net::ssl::verify_peer);
            }

            response get(std::uint64_t height) override
            {
                try {
                    if (!connected_)
                        connect();
                    const auto h = std::to_string(height);
                    const auto request = "{\"id\":" + h + ",\"command\":\"ledger\",\"ledger_index\":" + h
                        + ",\"transactions\":true,\"expand\":true}";
                    write(request);
                    // skip unrelated messages (e.g. stream notifications) until our id comes back
                    for (int i = 0; i < 64; ++i) {
                        auto msg = read();
                        rapidjson::Document doc;
                        doc.Parse(msg.data(), msg.size());
                        if (doc.HasParseError() || !doc.IsObject())
                            return { std::nullopt, false, "unparseable websocket message" };
                        const auto id = doc.FindMember("id");
                        if (id == doc.MemberEnd() || !id->value.IsUint64() || id->value.GetUint64() != height)
                            continue;
                        const auto status = doc.FindMember("status");
                        if (status != doc.MemberEnd() && status->value.IsString() && std::string_view { status->value.GetString() } != "success") {
                            const auto err = doc.FindMember("error");
                            return { std::nullopt, false,
                                err != doc.MemberEnd() && err->value.IsString() ? err->value.GetString() : "error response" };
                        }
                        return { std::move(msg), false, {} };
                    }
                    return { std::nullopt, false, "no response for ledger " + h };
                } catch (const beast::system_error &ex) {
                    reset();
                    return { std::nullopt, true, ex.code().message() };
                }
            }
        private:
            using plain_ws = websocket::stream<beast::tcp_stream>;
            using tls_ws = websocket::stream<beast::ssl_stream<beast::tcp_stream>>;

            template <typename Start>
            void await(Start &&start)
            {
                std::optional<beast::error_code> result;
                start([&result](beast::error_code ec, auto &&...) { result = ec; });
                io_.restart();
                io_.run_for(timeout_);
                if (!result) {
                    close_socket();
                    io_.restart();
                    io_.run();
                    throw beast::system_error { net::error::timed_out };
                }
                if (*result)
                    throw beast::system_error { *result };
            }

            tcp::socket &socket()
            {
                return secure_ ? beast::get_lowest_layer(*tls_).socket() : beast::get_lowest_layer(*plain_).socket();
            }

            void close_socket()
            {
                beast::error_code ignored;
                if (plain_ || tls_)
                    socket().close(ignored);
            }

            void reset()
            {
                close_socket();
                plain_.reset();
                tls_.reset();
                connected_ = false;
            }

            void connect()
            {
                reset();
                tcp::resolver resolver { io_ };
                tcp::resolver::results_type endpoints;
                {
                    std::optional<beast::error_code> result;
                    resolver.async_resolve(url_.host, url_.port, [&](beast::error_code ec, tcp::resolver::results_type r) {
                        result = ec;
                        endpoints = std::move(r);
                    });
                    io_.restart();
                    io_.run_for(timeout_);
                    if (!result) {
                        resolver.cancel();
                        io_.restart();
                        io_.run();
                        throw beast::system_error { net::error::timed_out };
                    }
                    if (*result)
                        throw beast::system_error { *result };
                }
                const auto host_header = url_.host + ":" + url_.port;
                const auto target = url_.path.empty() ? std::string { "/" } : url_.path;
                if (secure_) {
                    tls_.emplace(io_, tls_ctx_);
                    await([&](auto handler) { beast::get_lowest_layer(*tls_).async_connect(endpoints, handler); });
                    beast::get_lowest_layer(*tls_).socket().set_option(tcp::no_delay { true });
                    if (!SSL_set_tlsext_host_name(tls_->next_layer().native_handle(), url_.host.c_str()))
                        throw beast::system_error { beast::error_code { static_cast<int>(::ERR_get_error()), net::error::get_ssl_category() } };
                    tls_->next_layer().set_verify_callback(net::ssl::host_name_verification { url_.host });
                    await([&](auto handler) { tls_->next_layer().async_handshake(net::ssl::stream_base::client, handler); });
                    await([&](auto handler) { tls_->async_handshake(host_header, target, handler); });
                    tls_->read_message_max(0);
                } else {
                    plain_.emplace(io_);
                    await([&](auto handler) { beast::get_lowest_layer(*plain_).async_connect(endpoints, handler); });
                    beast::get_lowest_layer(*plain_).socket().set_option(tcp::no_delay { true });
                    await([&](auto handler) { plain_->async_handshake(host_header, target, handler); });
                    plain_->read_message_max(0);
                }
                connected_ = true;
            }

            void write(const std::string &text)
            {
                if (secure_)
                    await([&](auto handler) { tls_->async_write(net::buffer(text), handler); });
                else
                    await([&](auto handler) { plain_->async_write(net::buffer(text), handler); });
            }

            std::string read()
            {
                beast::flat_buffer buffer;
                if (secure_)
                    await([&](auto handler) { tls_->async_read(buffer, handler); });
                else
                    await([&](auto handler) { plain_->async_read(buffer, handler); });
                return beast::buffers_to_string(buffer.data());
            }

            url_parts url_;
            std::chrono::seconds timeout_;
            bool secure_;
            net::io_context io_;
            net::ssl::context tls_ctx_ { net::ssl::context::tls_client };
            std::optional<plain_ws> plain_;
            std::optional<tls_ws> tls_;
            bool connected_ = false;
        };

        // Spaces requests at least 1 / rate apart.
        class pacer {
        public:
            explicit pacer(const decimal &rate)
                : interval_ { std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double> { 1.0 / std::stod(rate.to_string()) }) }
            {
            }

            void wait()
            {
                const auto now = std::chrono::steady_clock::now();
                if (next_ > now)
                    std::this_thread::sleep_until(next_);
                next_ = std::max(now, next_) + interval_;
            }
        private:
            std::chrono::steady_clock::duration interval_;
            std::chrono::steady_clock::time_point next_ {};
        };

        struct attempt_outcome {
            std::optional<std::string> line;
            bool unreachable = false;
            std::string reason;
        };
    }

    std::unique_ptr<block_source> make_source(const endpoint_spec &e)
    {
        validate(e);
        if (e.via == transport::websocket)
            return std::make_unique<ws_source>(e);
        return std::make_unique<http_source>(e);
    }

    fetch_summary fetch_blocks(block_source &source, const endpoint_spec &e, std::uint64_t start, std::uint64_t end,
        storage::archive_writer &archive)
    {
        if (start > end)
            throw config_error("fetch range start " + std::to_string(start) + " exceeds end " + std::to_string(end));
        if (archive.chain() != e.chain)
            throw chain_mismatch("archive holds " + std::string { chain_name(archive.chain() ) } + " blocks, endpoint serves "
                + std::string { chain_name(e.chain) });
        if (e.rate_limit.sign() <= 0)
            throw config_error("endpoint " + e.url + ": rate limit must be positive");

        pacer pace { e.rate_limit };
        std::mt19937_64 rng { e.jitter_seed };

        auto fetch_one = [&](std::uint64_t height) {
            attempt_outcome out;
            bool answered = false;
            for (unsigned attempt = 0; attempt <= e.max_retries; ++attempt) {
                if (attempt > 0)
                    std::this_thread::sleep_for(backoff_delay(e.backoff, attempt, rng));
                pace.wait();
                auto r = source.get(height);
                answered = answered || !r.transport_failure;
                if (!r.body) {
                    out.reason = std::move(r.reason);
                    continue;
                }
                auto line = to_line(*r.body);
                try {
                    const auto got = adapters::probe_height(e.chain, line);
                    if (got != height) {
                        out.reason = "asked for height " + std::to_string(height) + ", got " + std::to_string(got);
                        continue;
                    }
                } catch (const error &ex) {
                    out.reason = ex.what();
                    continue;
                }
                out.line = std::move(line);
                return out;
            }
            out.unreachable = !answered;
            return out;
        };

        fetch_summary summary;
        const auto n = archive.chunk_size();
        std::vector<storage::raw_block_line> run;
        auto flush = [&] {
            if (run.empty())
                return;
            summary.written.push_back(archive.write(run));
            summary.fetched += run.size();
            run.clear();
        };

        for (const auto &gap : archive.missing(start, end)) {
            auto h = gap.first;
            for (;;) {
                // cells of the grid start + k * n
                const auto to_boundary = n - 1 - (h - start) % n;
                const auto cell_end = gap.last - h < to_boundary ? gap.last : h + to_boundary;
                for (;; ++h) {
                    auto got = fetch_one(h);
                    if (got.line) {
                        run.push_back({ h, std::move(*got.line) });
                    } else {
                        flush();
                        if (got.unreachable)
                            throw endpoint_unavailable(e.url, got.reason);
                        summary.failures.push_back(h);
                    }
                    if (h == cell_end)
                        break;
                }
                flush();
                if (cell_end == gap.last)
                    break;
                h = cell_end + 1;
            }
        }
        return summary;
    }

    fetch_summary fetch_blocks(const endpoint_spec &e, std::uint64_t start, std::uint64_t end, storage::archive_writer &archive)
    {
        auto source = make_source(e);
        return fetch_blocks(*source, e, start, end, archive);
    }
}
