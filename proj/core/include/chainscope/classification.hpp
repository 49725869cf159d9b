#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <chainscope/model.hpp>

namespace chainscope {
    // Per-chain action taxonomy. Lookup order: exact (receiver, name) rule, then a wildcard
    // ("*", name) rule, then the receiver's contract label, then the fallback category.
    struct classification_rules {
        static constexpr std::string_view any_receiver = "*";

        chain_id chain = chain_id::eosio;
        // name -> receiver (or "*") -> category
        std::map<std::string, std::map<std::string, action_category, std::less<>>, std::less<>> exact_rules;
        std::map<std::string, action_category, std::less<>> contract_labels;
        action_category fallback = action_category::other;

        void add_rule(std::string receiver, std::string name, action_category c);
        void add_label(std::string account, action_category c);

        bool operator==(const classification_rules &) const = default;
    };

    // Throws chain_mismatch when the action belongs to another chain.
    action_category classify_action(const classification_rules &rules, const action &a);

    // Built-in taxonomy; identical to the files shipped under data/rules/.
    classification_rules default_rules(chain_id chain);

    // {"chain": "eos", "default": "OTHER", "rules": [{"receiver","name","category"}], "labels": {account: category}}
    classification_rules parse_rules(std::string_view json_text);
    classification_rules load_rules(const std::filesystem::path &path);
    std::string rules_to_json(const classification_rules &rules);
}
