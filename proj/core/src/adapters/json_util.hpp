#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <rapidjson/document.h>
#include <rapidjson/stringbuffer.h>
#include <rapidjson/writer.h>
#include <chainscope/error.hpp>
#include <chainscope/model.hpp>

namespace chainscope::adapters::detail {
    using json_value = rapidjson::Value;
    using json_writer = rapidjson::Writer<rapidjson::StringBuffer>;

    inline void parse_document(rapidjson::Document &doc, std::string_view raw, std::string_view chain)
    {
        doc.Parse<rapidjson::kParseDefaultFlags>(raw.data(), raw.size());
        if (doc.HasParseError())
            throw malformed_block(std::string { chain } + ": invalid JSON at offset " + std::to_string(doc.GetErrorOffset()));
        if (!doc.IsObject())
            throw malformed_block(std::string { chain } + ": block document is not a JSON object");
    }

    inline std::string_view as_view(const json_value &v)
    {
        return { v.GetString(), v.GetStringLength() };
    }

    inline const json_value *member(const json_value &obj, const char *key)
    {
        if (!obj.IsObject())
            return nullptr;
        const auto it = obj.FindMember(key);
        return it == obj.MemberEnd() ? nullptr : &it->value;
    }

    inline std::optional<std::string_view> string_member(const json_value &obj, const char *key)
    {
        const auto *v = member(obj, key);
        if (v == nullptr || !v->IsString())
            return std::nullopt;
        return as_view(*v);
    }

    // Unsigned integer given either as a JSON number or a decimal string.
    inline std::optional<std::uint64_t> uint_member(const json_value &obj, const char *key)
    {
        const auto *v = member(obj, key);
        if (v == nullptr)
            return std::nullopt;
        if (v->IsUint64())
            return v->GetUint64();
        if (v->IsString()) {
            const auto s = as_view(*v);
            if (s.empty())
                return std::nullopt;
            std::uint64_t out = 0;
            for (const char c : s) {
                if (c < '0' || c > '9')
                    return std::nullopt;
                out = out * 10 + static_cast<std::uint64_t>(c - '0');
            }
            return out;
        }
        return std::nullopt;
    }

    inline std::string compact(const json_value &v)
    {
        rapidjson::StringBuffer buf;
        json_writer w { buf };
        v.Accept(w);
        return { buf.GetString(), buf.GetSize() };
    }

    inline payload_entry to_entry(std::string key, const json_value &v)
    {
        if (v.IsString())
            return { std::move(key), std::string { as_view(v) }, false };
        return { std::move(key), compact(v), true };
    }

    // Writes a payload entry's value back as JSON.
    inline void write_value(json_writer &w, const payload_entry &e)
    {
        if (!e.raw_json) {
            w.String(e.value.data(), static_cast<rapidjson::SizeType>(e.value.size()));
            return;
        }
        w.RawValue(e.value.data(), e.value.size(), rapidjson::kObjectType);
    }

    inline void write_key(json_writer &w, std::string_view k)
    {
        w.Key(k.data(), static_cast<rapidjson::SizeType>(k.size()));
    }

    inline void write_string(json_writer &w, std::string_view s)
    {
        w.String(s.data(), static_cast<rapidjson::SizeType>(s.size()));
    }

    inline bool starts_with(std::string_view s, std::string_view prefix)
    {
        return s.substr(0, prefix.size()) == prefix;
    }
}
