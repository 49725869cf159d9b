#include <chainscope/decimal.hpp>
#include <chainscope/error.hpp>

#include <array>
#include <cctype>

namespace chainscope {
    namespace {
        using wide = boost::multiprecision::checked_int512_t;

        const decimal::rep &pow10(int n)
        {
            static const auto table = [] {
                std::array<decimal::rep, 77> t {};
                t[0] = 1;
                for (size_t i = 1; i < t.size(); ++i)
                    t[i] = t[i - 1] * 10;
                return t;
            }();
            if (n < 0 || n >= static_cast<int>(table.size()))
                throw decimal_error("decimal exponent out of range: " + std::to_string(n));
            return table[n];
        }

        const decimal::rep &scale()
        {
            static const decimal::rep s = pow10(decimal::scale_digits);
            return s;
        }

        decimal::rep narrow(const wide &w)
        {
            try {
                return static_cast<decimal::rep>(w);
            } catch (const std::exception &) {
                throw decimal_error("decimal overflow");
            }
        }

        template<typename F>
        auto guarded(F &&f)
        {
            try {
                return f();
            } catch (const std::overflow_error &ex) {
                throw decimal_error(std::string { "decimal overflow: " } + ex.what());
            } catch (const std::range_error &ex) {
                throw decimal_error(std::string { "decimal overflow: " } + ex.what());
            }
        }
    }

    decimal::decimal(std::int64_t v)
        : units_ { guarded([&] { return rep { v } * scale(); }) }
    {
    }

    decimal::decimal(std::uint64_t v)
        : units_ { guarded([&] { return rep { v } * scale(); }) }
    {
    }

    decimal decimal::from_units(const rep &units)
    {
        decimal d;
        d.units_ = units;
        return d;
    }

    bool decimal::try_parse(std::string_view text, decimal &out) noexcept
    {
        try {
            out = parse(text);
            return true;
        } catch (...) {
            return false;
        }
    }

    decimal decimal::parse(std::string_view text)
    {
        size_t pos = 0;
        bool negative = false;
        if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
            negative = text[pos] == '-';
            ++pos;
        }
        std::string digits;
        int frac_digits = 0;
        bool seen_point = false;
        bool any_digit = false;
        for (; pos < text.size(); ++pos) {
            const char c = text[pos];
            if (c >= '0' && c <= '9') {
                any_digit = true;
                if (!(digits.empty() && c == '0'))
                    digits.push_back(c);
                if (seen_point)
                    ++frac_digits;
            } else if (c == '.' && !seen_point) {
                seen_point = true;
            } else {
                break;
            }
        }
        if (!any_digit)
            throw decimal_error("not a decimal: '" + std::string { text } + "'");
        long exponent = 0;
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            ++pos;
            bool exp_negative = false;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
                exp_negative = text[pos] == '-';
                ++pos;
            }
            if (pos >= text.size())
                throw decimal_error("not a decimal: '" + std::string { text } + "'");
            for (; pos < text.size(); ++pos) {
                const char c = text[pos];
                if (c < '0' || c > '9')
                    throw decimal_error("not a decimal: '" + std::string { text } + "'");
                exponent = exponent * 10 + (c - '0');
                if (exponent > 100000)
                    throw decimal_error("decimal exponent out of range: '" + std::string { text } + "'");
            }
            if (exp_negative)
                exponent = -exponent;
        }
        if (pos != text.size())
            throw decimal_error("not a decimal: '" + std::string { text } + "'");
        decimal d;
        if (digits.empty())
            return d;
        const long shift = scale_digits - frac_digits + exponent;
        const long significant = static_cast<long>(digits.size());
        if (shift < 0) {
            const long drop = -shift;
            if (drop >= significant)
                return d;
            digits.resize(static_cast<size_t>(significant - drop));
        }
        if (digits.size() > 78)
            throw decimal_error("decimal overflow: '" + std::string { text } + "'");
        d.units_ = guarded([&] {
            rep v { digits };
            if (shift > 0)
                v *= pow10(static_cast<int>(shift));
            return v;
        });
        if (negative)
            d.units_ = -d.units_;
        return d;
    }

    decimal decimal::ratio(const decimal &num, const decimal &den)
    {
        return num / den;
    }

    bool decimal::is_integer() const
    {
        return (units_ % scale()).is_zero();
    }

    decimal decimal::abs() const
    {
        decimal d;
        d.units_ = units_.sign() < 0 ? rep { -units_ } : units_;
        return d;
    }

    decimal decimal::operator-() const
    {
        decimal d;
        d.units_ = -units_;
        return d;
    }

    decimal &decimal::operator+=(const decimal &o)
    {
        units_ = guarded([&] { return rep { units_ + o.units_ }; });
        return *this;
    }

    decimal &decimal::operator-=(const decimal &o)
    {
        units_ = guarded([&] { return rep { units_ - o.units_ }; });
        return *this;
    }

    decimal &decimal::operator*=(const decimal &o)
    {
        units_ = guarded([&] { return narrow(wide { units_ } * wide { o.units_ } / wide { scale() }); });
        return *this;
    }

    decimal &decimal::operator/=(const decimal &o)
    {
        if (o.units_.is_zero())
            throw decimal_error("decimal division by zero");
        units_ = guarded([&] { return narrow(wide { units_ } * wide { scale() } / wide { o.units_ }); });
        return *this;
    }

    decimal decimal::round(int places) const
    {
        if (places < 0 || places > scale_digits)
            throw decimal_error("invalid rounding precision " + std::to_string(places));
        if (places == scale_digits)
            return *this;
        const rep &factor = pow10(scale_digits - places);
        rep q = units_ / factor;
        const rep r = units_ % factor;
        const rep twice = (r.sign() < 0 ? rep { -r } : r) * 2;
        if (twice >= factor)
            q += units_.sign() < 0 ? -1 : 1;
        return from_units(guarded([&] { return rep { q * factor }; }));
    }

    std::string decimal::to_fixed(int places) const
    {
        const decimal r = round(places);
        const rep mag = r.units_.sign() < 0 ? rep { -r.units_ } : r.units_;
        std::string out = (r.units_.sign() < 0) ? "-" : "";
        out += (mag / scale()).str();
        if (places > 0) {
            std::string frac = (mag % scale()).str();
            frac.insert(0, static_cast<size_t>(scale_digits) - frac.size(), '0');
            out += '.';
            out += frac.substr(0, static_cast<size_t>(places));
        }
        return out;
    }

    std::string decimal::to_string() const
    {
        const rep mag = units_.sign() < 0 ? rep { -units_ } : units_;
        std::string out = units_.sign() < 0 ? "-" : "";
        out += (mag / scale()).str();
        const rep frac_part = mag % scale();
        if (!frac_part.is_zero()) {
            std::string frac = frac_part.str();
            frac.insert(0, static_cast<size_t>(scale_digits) - frac.size(), '0');
            while (!frac.empty() && frac.back() == '0')
                frac.pop_back();
            out += '.';
            out += frac;
        }
        return out;
    }
}
