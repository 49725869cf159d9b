#pragma once

#include <exception>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <chainscope/model.hpp>

namespace chainscope::cli {
    enum exit_code : int {
        success = 0,
        config_failure = 1,
        network_failure = 2,
        integrity_failure = 3,
        internal_failure = 4,
    };

    exit_code exit_code_for(const std::exception_ptr &ex) noexcept;

    // CHAINSCOPE_ENDPOINT_EOS, CHAINSCOPE_ENDPOINT_TEZOS, CHAINSCOPE_ENDPOINT_XRP
    std::string endpoint_variable(chain_id chain);
    std::optional<std::string> endpoint_from_environment(chain_id chain);

    // Runs one command line (without the program name) and returns the process exit code.
    int run(std::span<const std::string> args, std::ostream &out, std::ostream &err);
}
