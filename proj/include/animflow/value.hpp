#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>

#include "animflow/error.hpp"

namespace animflow {

// Milliseconds since the Unix epoch.
struct Timestamp
{
    double ms = 0;

    auto operator<=>(const Timestamp&) const = default;
};

enum class ValueKind
{
    Null,
    Number,
    String,
    Boolean,
    Timestamp
};

inline const char* to_string(ValueKind kind)
{
    switch (kind) {
    case ValueKind::Null: return "null";
    case ValueKind::Number: return "number";
    case ValueKind::String: return "string";
    case ValueKind::Boolean: return "boolean";
    case ValueKind::Timestamp: return "timestamp";
    }
    return "?";
}

class Value
{
public:
    using Storage = std::variant<std::monostate, double, std::string, bool, Timestamp>;

    Value() = default;
    Value(std::monostate) {}
    Value(double v) : data_(v) {}
    Value(int v) : data_(static_cast<double>(v)) {}
    Value(bool v) : data_(v) {}
    Value(std::string v) : data_(std::move(v)) {}
    Value(const char* v) : data_(std::string(v)) {}
    Value(Timestamp v) : data_(v) {}

    ValueKind kind() const noexcept { return static_cast<ValueKind>(data_.index()); }

    bool is_null() const noexcept { return kind() == ValueKind::Null; }
    bool is_number() const noexcept { return kind() == ValueKind::Number; }
    bool is_string() const noexcept { return kind() == ValueKind::String; }
    bool is_bool() const noexcept { return kind() == ValueKind::Boolean; }
    bool is_timestamp() const noexcept { return kind() == ValueKind::Timestamp; }

    // Numbers and timestamps share an ordered numeric axis.
    bool is_numeric() const noexcept { return is_number() || is_timestamp(); }

    double as_number() const
    {
        if (is_number()) {
            return std::get<double>(data_);
        }
        if (is_timestamp()) {
            return std::get<Timestamp>(data_).ms;
        }
        throw TypeError(std::string("expected number, got ") + to_string(kind()));
    }

    const std::string& as_string() const
    {
        if (!is_string()) {
            throw TypeError(std::string("expected string, got ") + to_string(kind()));
        }
        return std::get<std::string>(data_);
    }

    bool as_bool() const
    {
        if (!is_bool()) {
            throw TypeError(std::string("expected boolean, got ") + to_string(kind()));
        }
        return std::get<bool>(data_);
    }

    Timestamp as_timestamp() const
    {
        if (!is_timestamp()) {
            throw TypeError(std::string("expected timestamp, got ") + to_string(kind()));
        }
        return std::get<Timestamp>(data_);
    }

    const Storage& storage() const noexcept { return data_; }

    // Structural equality and ordering (kind first). Used for containers and
    // document equality, not for expression semantics.
    friend bool operator==(const Value&, const Value&) = default;
    friend bool operator<(const Value& a, const Value& b)
    {
        if (a.data_.index() != b.data_.index()) {
            return a.data_.index() < b.data_.index();
        }
        return a.data_ < b.data_;
    }

private:
    Storage data_;
};

// Semantic three-way comparison. Kinds must match, except number vs timestamp.
inline std::strong_ordering compare_values(const Value& a, const Value& b)
{
    auto order = [](auto x, auto y) {
        if (x < y) return std::strong_ordering::less;
        if (y < x) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    };
    if (a.is_numeric() && b.is_numeric()) {
        return order(a.as_number(), b.as_number());
    }
    if (a.kind() != b.kind()) {
        throw TypeError(std::string("cannot compare ") + to_string(a.kind()) + " with "
                        + to_string(b.kind()));
    }
    switch (a.kind()) {
    case ValueKind::Null: return std::strong_ordering::equal;
    case ValueKind::String: return order(a.as_string(), b.as_string());
    case ValueKind::Boolean: return order(a.as_bool(), b.as_bool());
    default: break;
    }
    return std::strong_ordering::equal;
}

// Shortest round-trip representation; integral values print without a fraction.
inline std::string format_number(double v)
{
    if (v == 0) {
        return "0";
    }
    if (std::isnan(v)) {
        return "NaN";
    }
    if (std::isinf(v)) {
        return v > 0 ? "Infinity" : "-Infinity";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// Fixed-point formatting with a clean negative zero.
inline std::string format_fixed(double v, int decimals = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string out(buf);
    if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) {
        out.erase(0, 1);
    }
    return out;
}

namespace detail {

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t len, int& out)
{
    if (pos + len > s.size()) {
        return false;
    }
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && ptr == s.data() + pos + len;
}

} // namespace detail

// Accepts YYYY-MM-DD with an optional THH:MM[:SS[.fff]][Z] suffix (UTC).
inline std::optional<Timestamp> parse_timestamp(std::string_view s)
{
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-' || !detail::parse_digits(s, 0, 4, y)
        || !detail::parse_digits(s, 5, 2, mo) || !detail::parse_digits(s, 8, 2, d)) {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    double ms = static_cast<double>(sys_days{ymd}.time_since_epoch().count()) * 86400000.0;
    std::size_t pos = 10;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ') {
            return std::nullopt;
        }
        int hh = 0, mm = 0, ss = 0;
        if (!detail::parse_digits(s, pos + 1, 2, hh) || s.size() < pos + 6 || s[pos + 3] != ':'
            || !detail::parse_digits(s, pos + 4, 2, mm)) {
            return std::nullopt;
        }
        pos += 6;
        double frac = 0;
        if (pos < s.size() && s[pos] == ':') {
            if (!detail::parse_digits(s, pos + 1, 2, ss)) {
                return std::nullopt;
            }
            pos += 3;
            if (pos < s.size() && s[pos] == '.') {
                std::size_t end = pos + 1;
                while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) {
                    ++end;
                }
                double f = 0;
                auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + end, f);
                if (ec != std::errc() || ptr != s.data() + end) {
                    return std::nullopt;
                }
                frac = f;
                pos = end;
            }
        }
        if (pos < s.size() && s[pos] == 'Z') {
            ++pos;
        }
        if (pos != s.size() || hh > 23 || mm > 59 || ss > 60) {
            return std::nullopt;
        }
        ms += ((hh * 60.0 + mm) * 60.0 + ss + frac) * 1000.0;
    }
    return Timestamp{ms};
}

inline std::string format_timestamp(Timestamp t)
{
    using namespace std::chrono;
    double day_ms = 86400000.0;
    double days = std::floor(t.ms / day_ms);
    double rem = t.ms - days * day_ms;
    year_month_day ymd{sys_days{std::chrono::days{static_cast<long>(days)}}};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    std::string out(buf);
    if (rem != 0) {
        auto total = static_cast<std::int64_t>(std::llround(rem));
        std::snprintf(buf, sizeof buf, "T%02d:%02d:%02d.%03dZ", static_cast<int>(total / 3600000),
                      static_cast<int>(total / 60000 % 60), static_cast<int>(total / 1000 % 60),
                      static_cast<int>(total % 1000));
        out += buf;
    }
    return out;
}

// Display form used for labels, keys and diagnostics.
inline std::string to_display(const Value& v)
{
    switch (v.kind()) {
    case ValueKind::Null: return "null";
    case ValueKind::Number: return format_number(v.as_number());
    case ValueKind::String: return v.as_string();
    case ValueKind::Boolean: return v.as_bool() ? "true" : "false";
    case ValueKind::Timestamp: return format_timestamp(v.as_timestamp());
    }
    return "";
}

// Truthiness for event-stream gates: booleans as-is, null false, numbers non-zero.
inline bool truthy(const Value& v)
{
    switch (v.kind()) {
    case ValueKind::Null: return false;
    case ValueKind::Boolean: return v.as_bool();
    case ValueKind::Number: return v.as_number() != 0;
    case ValueKind::String: return !v.as_string().empty();
    case ValueKind::Timestamp: return true;
    }
    return false;
}

} // namespace animflow
