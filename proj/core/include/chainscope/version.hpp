#pragma once

#include <string_view>

namespace chainscope {
    std::string_view version() noexcept;
}
