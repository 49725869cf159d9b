#include <chainscope/classification.hpp>
#include <chainscope/error.hpp>

#include <fstream>
#include <sstream>
#include <nlohmann/json.hpp>

namespace chainscope {
    using json = nlohmann::ordered_json;

    void classification_rules::add_rule(std::string receiver, std::string name, action_category c)
    {
        exact_rules[std::move(name)][std::move(receiver)] = c;
    }

    void classification_rules::add_label(std::string account, action_category c)
    {
        contract_labels[std::move(account)] = c;
    }

    action_category classify_action(const classification_rules &rules, const action &a)
    {
        if (a.chain != rules.chain)
            throw chain_mismatch("classification rules for " + std::string { chain_name(rules.chain) } + " applied to a "
                + std::string { chain_name(a.chain) } + " action");
        if (const auto by_name = rules.exact_rules.find(a.name); by_name != rules.exact_rules.end()) {
            if (const auto it = by_name->second.find(a.receiver); it != by_name->second.end())
                return it->second;
            if (const auto it = by_name->second.find(classification_rules::any_receiver); it != by_name->second.end())
                return it->second;
        }
        if (const auto it = rules.contract_labels.find(a.receiver); it != rules.contract_labels.end())
            return it->second;
        return rules.fallback;
    }

    classification_rules default_rules(chain_id chain)
    {
        using enum action_category;
        classification_rules r;
        r.chain = chain;
        r.fallback = other;
        switch (chain) {
            case chain_id::eosio:
                r.add_rule("eosio.token", "transfer", token);
                // any contract implementing the standard token interface
                r.add_rule("*", "transfer", token);
                for (const auto *n : { "newaccount", "bidname", "deposit", "linkauth", "unlinkauth", "updateauth", "deleteauth" })
                    r.add_rule("eosio", n, account);
                for (const auto *n : { "voteproducer", "regproducer", "unregprod", "claimrewards", "onblock", "regproxy" })
                    r.add_rule("eosio", n, consensus);
                for (const auto *n : { "delegatebw", "undelegatebw", "buyrambytes", "buyram", "sellram", "rentcpu", "rentnet",
                         "refund", "withdraw" })
                    r.add_rule("eosio", n, other);
                r.add_label("eosio.token", token);
                r.add_label("eidosonecoin", token);
                r.add_label("betdicetasks", gambling);
                r.add_label("betdicegroup", gambling);
                r.add_label("whaleextrust", dex);
                r.add_label("pornhashbaby", other);
                break;
            case chain_id::tezos:
                r.add_rule("*", "transaction", peer_to_peer);
                for (const auto *n : { "reveal", "origination", "activate_account" })
                    r.add_rule("*", n, account);
                for (const auto *n : { "endorsement", "endorsement_with_slot", "delegation", "seed_nonce_revelation",
                         "double_baking_evidence", "double_endorsement_evidence" })
                    r.add_rule("*", n, consensus);
                for (const auto *n : { "ballot", "proposals" })
                    r.add_rule("*", n, other);
                break;
            case chain_id::xrpl:
                for (const auto *n : { "Payment", "EscrowFinish" })
                    r.add_rule("*", n, peer_to_peer);
                for (const auto *n : { "TrustSet", "AccountSet", "SignerListSet", "SetRegularKey", "DepositPreauth", "AccountDelete" })
                    r.add_rule("*", n, account);
                for (const auto *n : { "OfferCreate", "OfferCancel" })
                    r.add_rule("*", n, dex);
                break;
        }
        return r;
    }

    classification_rules parse_rules(std::string_view json_text)
    {
        json doc;
        try {
            doc = json::parse(json_text);
        } catch (const json::parse_error &ex) {
            throw config_error(std::string { "classification rules: " } + ex.what());
        }
        auto category_of = [](const json &v, const std::string &where) {
            if (!v.is_string())
                throw config_error("classification rules: " + where + ": category must be a string");
            const auto c = parse_category(v.get<std::string>());
            if (!c)
                throw config_error("classification rules: " + where + ": unknown category '" + v.get<std::string>() + "'");
            return *c;
        };
        if (!doc.is_object() || !doc.contains("chain") || !doc["chain"].is_string())
            throw config_error("classification rules: missing \"chain\"");
        const auto chain = parse_chain(doc["chain"].get<std::string>());
        if (!chain)
            throw config_error("classification rules: unknown chain '" + doc["chain"].get<std::string>() + "'");
        classification_rules r;
        r.chain = *chain;
        if (doc.contains("default"))
            r.fallback = category_of(doc["default"], "default");
        if (doc.contains("rules")) {
            if (!doc["rules"].is_array())
                throw config_error("classification rules: \"rules\" must be a list");
            size_t i = 0;
            for (const auto &rule : doc["rules"]) {
                const auto where = "rules[" + std::to_string(i++) + "]";
                if (!rule.is_object() || !rule.contains("name") || !rule["name"].is_string() || !rule.contains("category"))
                    throw config_error("classification rules: " + where + ": needs name and category");
                const std::string receiver = rule.contains("receiver") ? rule["receiver"].get<std::string>() : "*";
                r.add_rule(receiver, rule["name"].get<std::string>(), category_of(rule["category"], where));
            }
        }
        if (doc.contains("labels")) {
            if (!doc["labels"].is_object())
                throw config_error("classification rules: \"labels\" must be an object");
            for (const auto &[account, cat] : doc["labels"].items())
                r.add_label(account, category_of(cat, "labels." + account));
        }
        return r;
    }

    classification_rules load_rules(const std::filesystem::path &path)
    {
        std::ifstream in { path, std::ios::binary };
        if (!in)
            throw config_error("cannot open classification rules " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_rules(ss.str());
    }

    std::string rules_to_json(const classification_rules &rules)
    {
        json doc;
        doc["chain"] = chain_token(rules.chain);
        doc["default"] = category_name(rules.fallback);
        auto list = json::array();
        for (const auto &[name, receivers] : rules.exact_rules) {
            for (const auto &[receiver, cat] : receivers)
                list.push_back({ { "receiver", receiver }, { "name", name }, { "category", category_name(cat) } });
        }
        doc["rules"] = std::move(list);
        auto labels = json::object();
        for (const auto &[account, cat] : rules.contract_labels)
            labels[account] = category_name(cat);
        doc["labels"] = std::move(labels);
        return doc.dump(2) + "\n";
    }
}
