#include <chainscope/version.hpp>

namespace chainscope {
    std::string_view version() noexcept
    {
        return CHAINSCOPE_VERSION;
    }
}
