#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chainscope {
    struct error: std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    struct malformed_block: error {
        using error::error;
    };

    struct chain_mismatch: error {
        using error::error;
    };

    struct decimal_error: error {
        using error::error;
    };

    struct io_error: error {
        using error::error;
    };

    struct non_contiguous: error {
        using error::error;
    };

    struct config_error: error {
        using error::error;
    };

    struct empty_window: error {
        using error::error;
    };

    struct cyclic_parentage: error {
        using error::error;
    };

    struct missing_result: error {
        using error::error;
    };

    struct endpoint_unavailable: error {
        endpoint_unavailable(std::string endpoint, const std::string &reason)
            : error("endpoint unavailable: " + endpoint + ": " + reason), endpoint_ { std::move(endpoint) }
        {
        }

        const std::string &endpoint() const noexcept { return endpoint_; }
    private:
        std::string endpoint_;
    };

    // inclusive height range
    struct height_range {
        std::uint64_t first = 0;
        std::uint64_t last = 0;

        std::uint64_t size() const noexcept { return last - first + 1; }
        bool operator==(const height_range &) const = default;
    };

    struct missing_chunk: error {
        explicit missing_chunk(std::vector<height_range> gaps);

        const std::vector<height_range> &gaps() const noexcept { return gaps_; }
    private:
        std::vector<height_range> gaps_;
    };

    struct duplicate_height: error {
        explicit duplicate_height(std::vector<std::uint64_t> heights);

        const std::vector<std::uint64_t> &heights() const noexcept { return heights_; }
    private:
        std::vector<std::uint64_t> heights_;
    };
}
