#include <chainscope/error.hpp>
#include <chainscope/hash.hpp>

#include <array>
#include <fstream>
#include <memory>
#include <openssl/evp.h>

namespace chainscope {
    namespace {
        using md_ctx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

        md_ctx new_ctx()
        {
            md_ctx ctx { EVP_MD_CTX_new(), &EVP_MD_CTX_free };
            if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
                throw error("sha256 init failed");
            return ctx;
        }

        std::string finish(EVP_MD_CTX *ctx)
        {
            std::array<unsigned char, EVP_MAX_MD_SIZE> md {};
            unsigned int len = 0;
            if (EVP_DigestFinal_ex(ctx, md.data(), &len) != 1)
                throw error("sha256 final failed");
            static constexpr char hex[] = "0123456789abcdef";
            std::string out;
            out.reserve(len * 2);
            for (unsigned i = 0; i < len; ++i) {
                out.push_back(hex[md[i] >> 4]);
                out.push_back(hex[md[i] & 0xf]);
            }
            return out;
        }
    }

    std::string sha256_hex(std::string_view data)
    {
        auto ctx = new_ctx();
        EVP_DigestUpdate(ctx.get(), data.data(), data.size());
        return finish(ctx.get());
    }

    std::string sha256_file(const std::filesystem::path &path)
    {
        std::ifstream in { path, std::ios::binary };
        if (!in)
            throw io_error("cannot open " + path.string());
        auto ctx = new_ctx();
        std::array<char, 1 << 16> buf {};
        while (in) {
            in.read(buf.data(), buf.size());
            if (in.gcount() > 0)
                EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
        }
        return finish(ctx.get());
    }
}
