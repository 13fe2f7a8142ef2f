#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "animflow/error.hpp"

namespace animflow {

// Named easing curves, matching d3-ease formulas.
enum class Easing
{
    Linear,
    QuadIn,
    QuadOut,
    QuadInOut,
    CubicIn,
    CubicOut,
    CubicInOut,
    SinIn,
    SinOut,
    SinInOut,
    ExpIn,
    ExpOut,
    ExpInOut
};

inline constexpr std::array<std::pair<Easing, std::string_view>, 13> kEasingNames{{
    {Easing::Linear, "linear"},
    {Easing::QuadIn, "quad-in"},
    {Easing::QuadOut, "quad-out"},
    {Easing::QuadInOut, "quad-in-out"},
    {Easing::CubicIn, "cubic-in"},
    {Easing::CubicOut, "cubic-out"},
    {Easing::CubicInOut, "cubic-in-out"},
    {Easing::SinIn, "sin-in"},
    {Easing::SinOut, "sin-out"},
    {Easing::SinInOut, "sin-in-out"},
    {Easing::ExpIn, "exp-in"},
    {Easing::ExpOut, "exp-out"},
    {Easing::ExpInOut, "exp-in-out"},
}};

inline std::string_view easing_name(Easing e)
{
    for (const auto& [kind, name] : kEasingNames) {
        if (kind == e) return name;
    }
    return "linear";
}

// Accepts the kebab-case names and d3's camelCase spellings (cubicInOut, easeCubicInOut).
inline std::optional<Easing> find_easing(std::string_view name)
{
    std::string canon;
    if (name.substr(0, 4) == "ease" && name.size() > 4 && std::isupper(static_cast<unsigned char>(name[4]))) {
        name.remove_prefix(4);
    }
    for (std::size_t i = 0; i < name.size(); ++i) {
        char c = name[i];
        if (std::isupper(static_cast<unsigned char>(c))) {
            if (i > 0) canon += '-';
            canon += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            canon += c;
        }
    }
    for (const auto& [kind, n] : kEasingNames) {
        if (n == canon) return kind;
    }
    return std::nullopt;
}

namespace detail {

inline double tpmt(double x)
{
    return (std::pow(2.0, -10.0 * x) - 0.0009765625) * 1.0009775171065494;
}

} // namespace detail

inline double ease(Easing e, double t)
{
    constexpr double pi = 3.14159265358979323846;
    switch (e) {
    case Easing::Linear: return t;
    case Easing::QuadIn: return t * t;
    case Easing::QuadOut: return t * (2 - t);
    case Easing::QuadInOut:
        t *= 2;
        return (t <= 1 ? t * t : -(t - 1) * (t - 3) + 1) / 2;
    case Easing::CubicIn: return t * t * t;
    case Easing::CubicOut: {
        double s = t - 1;
        return s * s * s + 1;
    }
    case Easing::CubicInOut: {
        t *= 2;
        if (t <= 1) return t * t * t / 2;
        double s = t - 2;
        return (s * s * s + 2) / 2;
    }
    case Easing::SinIn: return t == 1 ? 1 : 1 - std::cos(t * pi / 2);
    case Easing::SinOut: return std::sin(t * pi / 2);
    case Easing::SinInOut: return (1 - std::cos(pi * t)) / 2;
    case Easing::ExpIn: return detail::tpmt(1 - t);
    case Easing::ExpOut: return 1 - detail::tpmt(t);
    case Easing::ExpInOut:
        t *= 2;
        return (t <= 1 ? detail::tpmt(1 - t) : 2 - detail::tpmt(t - 1)) / 2;
    }
    return t;
}

inline double apply_easing(std::string_view name, double t)
{
    auto e = find_easing(name);
    if (!e) {
        throw Error("unknown easing \"" + std::string(name) + "\"");
    }
    return ease(*e, t);
}

// Smallest t in [0,1] with ease(t) >= y. Every named curve is non-decreasing.
inline double invert_easing(Easing e, double y)
{
    if (e == Easing::Linear) {
        return y;
    }
    double lo = 0, hi = 1;
    for (int i = 0; i < 200 && lo < hi; ++i) {
        double mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        if (ease(e, mid) >= y) hi = mid;
        else lo = mid;
    }
    return hi;
}

} // namespace animflow
