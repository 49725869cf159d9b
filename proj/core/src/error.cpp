#include <chainscope/error.hpp>

namespace chainscope {
    namespace {
        std::string describe_gaps(const std::vector<height_range> &gaps)
        {
            std::string out = "missing heights:";
            size_t shown = 0;
            for (const auto &g : gaps) {
                if (shown++ == 8) {
                    out += " ...";
                    break;
                }
                out += " [" + std::to_string(g.first) + "," + std::to_string(g.last) + "]";
            }
            return out;
        }

        std::string describe_heights(const std::vector<std::uint64_t> &heights)
        {
            std::string out = "duplicate heights:";
            size_t shown = 0;
            for (const auto h : heights) {
                if (shown++ == 8) {
                    out += " ...";
                    break;
                }
                out += " " + std::to_string(h);
            }
            return out;
        }
    }

    missing_chunk::missing_chunk(std::vector<height_range> gaps)
        : error(describe_gaps(gaps)), gaps_ { std::move(gaps) }
    {
    }

    duplicate_height::duplicate_height(std::vector<std::uint64_t> heights)
        : error(describe_heights(heights)), heights_ { std::move(heights) }
    {
    }
}
