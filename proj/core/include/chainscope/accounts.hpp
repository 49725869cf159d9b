#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>
#include <chainscope/time.hpp>

namespace chainscope::accounts {
    inline constexpr std::string_view descendant_suffix = "-descendant";

    struct account_record {
        std::string address;
        std::optional<std::string> username;
        std::optional<std::string> parent;
        std::optional<timestamp> activation_date;

        bool operator==(const account_record &) const = default;
    };

    // Address -> record. Insertion rejects self-parentage and parent cycles with cyclic_parentage.
    class account_registry {
    public:
        void add(account_record r);
        const account_record *find(std::string_view address) const;
        std::size_t size() const noexcept { return records_.size(); }
        std::vector<account_record> records() const;
    private:
        std::unordered_map<std::string, account_record> records_;
    };

    // Own username, else the parent's username plus "-descendant", else the address. One parent hop only.
    std::string resolve_entity(std::string_view address, const account_registry &registry);

    // JSON array of {"address", "username"?, "parent"?, "activation_date"?}
    account_registry parse_registry(std::string_view json_text);
    account_registry load_registry(const std::filesystem::path &path);
    std::string registry_to_json(const account_registry &registry);
}
