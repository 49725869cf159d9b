#include <chainscope/accounts.hpp>
#include <chainscope/error.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <nlohmann/json.hpp>

namespace chainscope::accounts {
    using json = nlohmann::ordered_json;

    void account_registry::add(account_record r)
    {
        if (r.address.empty())
            throw config_error("account record without address");
        if (r.parent && r.parent->empty())
            r.parent.reset();
        if (r.username && r.username->empty())
            r.username.reset();
        if (r.parent) {
            if (*r.parent == r.address)
                throw cyclic_parentage("account " + r.address + " is its own parent");
            // walking up from the new parent must not reach the new record
            std::unordered_set<std::string_view> seen;
            std::string_view cur = *r.parent;
            while (true) {
                if (cur == r.address)
                    throw cyclic_parentage("parent chain of " + r.address + " loops back to itself");
                if (!seen.insert(cur).second)
                    break;
                const auto it = records_.find(std::string { cur });
                if (it == records_.end() || !it->second.parent)
                    break;
                cur = *it->second.parent;
            }
        }
        auto key = r.address;
        records_.insert_or_assign(std::move(key), std::move(r));
    }

    const account_record *account_registry::find(std::string_view address) const
    {
        const auto it = records_.find(std::string { address });
        return it == records_.end() ? nullptr : &it->second;
    }

    std::vector<account_record> account_registry::records() const
    {
        std::vector<account_record> out;
        out.reserve(records_.size());
        for (const auto &[_, r] : records_)
            out.push_back(r);
        std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.address < b.address; });
        return out;
    }

    std::string resolve_entity(std::string_view address, const account_registry &registry)
    {
        const auto *rec = registry.find(address);
        if (!rec)
            return std::string { address };
        if (rec->username)
            return *rec->username;
        if (rec->parent) {
            if (*rec->parent == rec->address)
                throw cyclic_parentage("account " + rec->address + " is its own parent");
            if (const auto *p = registry.find(*rec->parent); p && p->username)
                return *p->username + std::string { descendant_suffix };
        }
        return std::string { address };
    }

    account_registry parse_registry(std::string_view json_text)
    {
        json doc;
        try {
            doc = json::parse(json_text);
        } catch (const json::parse_error &ex) {
            throw config_error(std::string { "account registry: " } + ex.what());
        }
        if (!doc.is_array())
            throw config_error("account registry must be a JSON array");
        auto opt_string = [](const json &o, const char *key, size_t i) -> std::optional<std::string> {
            if (!o.contains(key) || o[key].is_null())
                return std::nullopt;
            if (!o[key].is_string())
                throw config_error("account registry[" + std::to_string(i) + "]." + key + " must be a string");
            return o[key].get<std::string>();
        };
        // cycles are only detectable once every record is known, so parents are attached in a second pass
        std::vector<account_record> pending;
        account_registry reg;
        for (size_t i = 0; i < doc.size(); ++i) {
            const auto &o = doc[i];
            if (!o.is_object())
                throw config_error("account registry[" + std::to_string(i) + "] must be an object");
            account_record r;
            const auto addr = opt_string(o, "address", i);
            if (!addr)
                throw config_error("account registry[" + std::to_string(i) + "] has no address");
            r.address = *addr;
            r.username = opt_string(o, "username", i);
            r.parent = opt_string(o, "parent", i);
            if (const auto d = opt_string(o, "activation_date", i)) {
                timestamp t;
                if (!try_parse_utc(*d, t))
                    throw config_error("account registry[" + std::to_string(i) + "].activation_date: bad date '" + *d + "'");
                r.activation_date = t;
            }
            auto bare = r;
            bare.parent.reset();
            reg.add(std::move(bare));
            pending.push_back(std::move(r));
        }
        for (auto &r : pending) {
            if (r.parent)
                reg.add(std::move(r));
        }
        return reg;
    }

    account_registry load_registry(const std::filesystem::path &path)
    {
        std::ifstream in { path, std::ios::binary };
        if (!in)
            throw config_error("cannot open account registry " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_registry(ss.str());
    }

    std::string registry_to_json(const account_registry &registry)
    {
        auto arr = json::array();
        for (const auto &r : registry.records()) {
            json o;
            o["address"] = r.address;
            if (r.username)
                o["username"] = *r.username;
            if (r.parent)
                o["parent"] = *r.parent;
            if (r.activation_date)
                o["activation_date"] = format_utc(*r.activation_date);
            arr.push_back(std::move(o));
        }
        return arr.dump(2) + "\n";
    }
}
