#pragma once

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <boost/multiprecision/cpp_int.hpp>

namespace chainscope {
    // Exact fixed-point decimal with 18 fractional digits, backed by a checked 256-bit integer.
    // Arithmetic that leaves the representable range throws decimal_error.
    class decimal {
    public:
        using rep = boost::multiprecision::checked_int256_t;
        static constexpr int scale_digits = 18;

        decimal() = default;
        decimal(std::int64_t v);
        decimal(std::uint64_t v);
        decimal(int v): decimal(static_cast<std::int64_t>(v)) {}

        // Accepts [+-]digits[.digits][(e|E)[+-]digits]. Digits past the 18th fractional place are truncated.
        static decimal parse(std::string_view text);
        static bool try_parse(std::string_view text, decimal &out) noexcept;
        static decimal from_units(const rep &units);
        // numerator / denominator, truncated toward zero
        static decimal ratio(const decimal &num, const decimal &den);

        const rep &units() const noexcept { return units_; }
        bool is_zero() const noexcept { return units_.is_zero(); }
        int sign() const noexcept { return units_.sign(); }
        bool is_integer() const;
        decimal abs() const;

        // shortest exact representation: "1.5", "-0.001", "42"
        std::string to_string() const;
        // round half away from zero to a fixed number of places
        std::string to_fixed(int places) const;
        decimal round(int places) const;

        decimal &operator+=(const decimal &o);
        decimal &operator-=(const decimal &o);
        decimal &operator*=(const decimal &o);
        decimal &operator/=(const decimal &o);
        friend decimal operator+(decimal a, const decimal &b) { return a += b; }
        friend decimal operator-(decimal a, const decimal &b) { return a -= b; }
        friend decimal operator*(decimal a, const decimal &b) { return a *= b; }
        friend decimal operator/(decimal a, const decimal &b) { return a /= b; }
        decimal operator-() const;

        friend bool operator==(const decimal &a, const decimal &b) { return a.units_ == b.units_; }
        friend std::strong_ordering operator<=>(const decimal &a, const decimal &b)
        {
            if (a.units_ < b.units_) return std::strong_ordering::less;
            if (a.units_ > b.units_) return std::strong_ordering::greater;
            return std::strong_ordering::equal;
        }
    private:
        rep units_ {};
    };

    inline std::ostream &operator<<(std::ostream &os, const decimal &d)
    {
        return os << d.to_string();
    }
}
