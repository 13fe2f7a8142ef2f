#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "animflow/runtime.hpp"

namespace animflow {

inline constexpr double kMarginLeft = 50;
inline constexpr double kMarginTop = 10;
inline constexpr double kMarginRight = 10;
inline constexpr double kMarginBottom = 30;
inline constexpr double kDefaultArea = 64;
inline constexpr double kHitSlop = 5;
inline constexpr const char* kDefaultFill = "#4c78a8";

struct MarkItem
{
    MarkType kind = MarkType::Circle;
    double x = 0;
    double y = 0;
    std::optional<double> x2;
    std::optional<double> y2;
    double size = kDefaultArea; // area in px^2
    std::string fill = kDefaultFill;
    double opacity = 1;
    std::string text;
    std::string shape = "circle";
    std::string tooltip;
    std::string group; // line series
    Value key;
    std::size_t row = 0; // raw table row
    RowRole role = RowRole::Update;
    bool clipped = false;
};

struct Tick
{
    double pos = 0;
    std::string label;
};

struct AxisItem
{
    std::string channel; // "x" or "y"
    std::string title;
    std::vector<Tick> ticks;
};

struct LegendEntry
{
    std::string label;
    std::string color;
};

struct Legend
{
    std::string title;
    std::vector<LegendEntry> entries;
};

struct Scenegraph
{
    double width = kDefaultWidth;
    double height = kDefaultHeight;
    Value anim_value;
    std::vector<MarkItem> items;
    std::vector<AxisItem> axes;
    std::vector<Legend> legends;
    std::vector<WidgetState> widgets;
    std::map<std::string, std::vector<Row>> selections;
};

// ---------------------------------------------------------------------------
// Scales

namespace detail {

inline double num(const Value& v) { return v.is_numeric() ? v.as_number() : std::nan(""); }

inline std::pair<double, double> numeric_range(const ScaleNode& s)
{
    double r0 = s.range.size() > 0 ? num(s.range[0]) : 0;
    double r1 = s.range.size() > 1 ? num(s.range[1]) : r0;
    if (s.reverse) std::swap(r0, r1);
    return {r0, r1};
}

inline std::optional<std::size_t> domain_index(const std::vector<Value>& domain, const Value& v)
{
    for (std::size_t i = 0; i < domain.size(); ++i) {
        if (domain[i] == v || (domain[i].is_numeric() && v.is_numeric() && domain[i].as_number() == v.as_number())) {
            return i;
        }
    }
    return std::nullopt;
}

inline std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline int hex_digit(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return 0;
}

inline std::string mix_colors(const std::string& a, const std::string& b, double t)
{
    if (a.size() != 7 || b.size() != 7 || a[0] != '#' || b[0] != '#') return t < 0.5 ? a : b;
    char out[8];
    out[0] = '#';
    for (int c = 0; c < 3; ++c) {
        int x = hex_digit(a[1 + 2 * c]) * 16 + hex_digit(a[2 + 2 * c]);
        int y = hex_digit(b[1 + 2 * c]) * 16 + hex_digit(b[2 + 2 * c]);
        int v = static_cast<int>(std::lround(x + (y - x) * t));
        std::snprintf(out + 1 + 2 * c, 3, "%02x", std::clamp(v, 0, 255));
    }
    return std::string(out, 7);
}

} // namespace detail

// Band start and width for band scales; centre offset for point scales.
struct BandGeometry
{
    double start = 0;
    double bandwidth = 0;
};

inline std::optional<BandGeometry> band_of(const ScaleNode& s, const std::vector<Value>& domain, const Value& v)
{
    auto idx = detail::domain_index(domain, v);
    if (!idx || domain.empty()) return std::nullopt;
    auto [r0, r1] = detail::numeric_range(s);
    double step = (r1 - r0) / static_cast<double>(domain.size());
    if (s.kind == ScaleKind::Band) {
        return BandGeometry{r0 + step * (static_cast<double>(*idx) + 0.1), step * 0.8};
    }
    return BandGeometry{r0 + step * (static_cast<double>(*idx) + 0.5), 0};
}

// Applies a scale to a value. Numeric scales yield a number, colour and shape
// scales a string.
inline Value apply_scale(const ScaleNode& s, const std::vector<Value>& domain, const Value& v)
{
    if (v.is_null()) return Value();
    switch (s.kind) {
    case ScaleKind::Linear:
    case ScaleKind::Sqrt:
    case ScaleKind::Time: {
        if (domain.size() < 2 || !v.is_numeric()) return Value(std::nan(""));
        double d0 = detail::num(domain.front()), d1 = detail::num(domain.back());
        auto [r0, r1] = detail::numeric_range(s);
        double t = d1 == d0 ? 0.5 : (v.as_number() - d0) / (d1 - d0);
        if (s.kind == ScaleKind::Sqrt) t = std::sqrt(std::max(0.0, t));
        return Value(r0 + t * (r1 - r0));
    }
    case ScaleKind::Point:
    case ScaleKind::Band: {
        auto b = band_of(s, domain, v);
        if (!b) return Value(std::nan(""));
        return Value(b->start);
    }
    case ScaleKind::Ordinal:
    case ScaleKind::OrdinalColor: {
        if (s.range.empty()) return Value();
        auto idx = detail::domain_index(domain, v);
        std::size_t i = idx ? *idx : static_cast<std::size_t>(detail::fnv1a(to_display(v)) % s.range.size());
        return s.range[i % s.range.size()];
    }
    case ScaleKind::SequentialColor: {
        if (domain.size() < 2 || !v.is_numeric() || s.range.size() < 2) return Value(kDefaultFill);
        double d0 = detail::num(domain.front()), d1 = detail::num(domain.back());
        double t = d1 == d0 ? 0.5 : std::clamp((v.as_number() - d0) / (d1 - d0), 0.0, 1.0);
        std::string a = s.range.front().is_string() ? s.range.front().as_string() : kDefaultFill;
        std::string b = s.range.back().is_string() ? s.range.back().as_string() : kDefaultFill;
        return Value(detail::mix_colors(a, b, s.reverse ? 1 - t : t));
    }
    }
    return Value();
}

// ---------------------------------------------------------------------------
// Encoding

namespace detail {

struct FrameContext
{
    const RuntimeState& st;
    const MarkNode& mark;
    const RenderedTable& table;
};

inline const ChannelBinding* pick_binding(const FrameContext& fc, const MarkChannel& ch, std::size_t i)
{
    if (ch.condition && ch.when
        && evaluate_selection(fc.st, *ch.condition, fc.table.table, i, fc.table.meta[i].source)) {
        return &*ch.when;
    }
    return &ch.base;
}

} // namespace detail

// Resolved value of one channel for row i of the rendered table, or null when
// the channel is absent.
inline Value resolve_channel(const RuntimeState& st, const MarkNode& mark, const RenderedTable& table,
                             const std::string& channel, std::size_t i)
{
    auto it = mark.channels.find(channel);
    if (it == mark.channels.end()) return Value();
    detail::FrameContext fc{st, mark, table};
    const ChannelBinding* b = detail::pick_binding(fc, it->second, i);
    if (b->value) return *b->value;
    if (!b->field) return Value();
    const Value& raw = table.table.at(i, *b->field);
    if (!b->scale) return raw;
    const auto& scale = st.graph->get<ScaleNode>(*b->scale);
    return apply_scale(scale, st.domains.at(*b->scale), raw);
}

namespace detail {

inline std::optional<double> number_of(const Value& v)
{
    if (v.is_numeric()) return v.as_number();
    return std::nullopt;
}

inline std::string display_of(const Value& v) { return v.is_null() ? std::string() : to_display(v); }

inline double baseline(const RuntimeState& st, const std::string& scale)
{
    const auto& s = st.graph->get<ScaleNode>(scale);
    const auto& dom = st.domains.at(scale);
    if (dom.size() < 2) return 0;
    double lo = std::min(num(dom.front()), num(dom.back()));
    double hi = std::max(num(dom.front()), num(dom.back()));
    return apply_scale(s, dom, Value(std::clamp(0.0, lo, hi))).as_number();
}

inline const ScaleNode* channel_scale(const RuntimeState& st, const MarkNode& mark, const char* channel)
{
    auto it = mark.channels.find(channel);
    if (it == mark.channels.end() || !it->second.base.scale) return nullptr;
    return st.graph->find<ScaleNode>(*it->second.base.scale);
}

inline bool finite_in(double v, double lo, double hi)
{
    const double tol = 1;
    return std::isfinite(v) && v >= lo - tol && v <= hi + tol;
}

inline std::vector<double> nice_ticks(double lo, double hi, int max_count)
{
    std::vector<double> out;
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return out;
    double span = hi - lo;
    double raw = span / max_count;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= max_count) break;
    }
    double first = std::ceil(lo / step) * step;
    for (double v = first; v < hi - step * 1e-9 && out.size() < static_cast<std::size_t>(max_count); v += step) {
        double snapped = std::round(v / step) * step;
        if (snapped > lo + step * 1e-9) out.push_back(snapped == 0 ? 0 : snapped);
    }
    return out;
}

inline std::string tick_label(double v, bool temporal)
{
    if (temporal) return format_timestamp(Timestamp{v});
    double r = std::round(v * 1e6) / 1e6;
    return format_number(r == 0 ? 0 : r);
}

inline void build_axes(Scenegraph& sg, const RuntimeState& st, const MarkNode& mark)
{
    for (const char* channel : {"x", "y"}) {
        const ScaleNode* s = channel_scale(st, mark, channel);
        if (!s) continue;
        const auto& ch = mark.channels.at(channel);
        const auto& dom = st.domains.at(scale_id(channel));
        AxisItem axis;
        axis.channel = channel;
        axis.title = ch.base.field.value_or("");
        bool temporal = ch.base.type == FieldType::Temporal;
        if (is_continuous(s->kind)) {
            if (dom.size() >= 2) {
                double lo = num(dom.front()), hi = num(dom.back());
                auto px = [&](double v) { return apply_scale(*s, dom, Value(v)).as_number(); };
                axis.ticks.push_back({px(lo), tick_label(lo, temporal)});
                for (double v : nice_ticks(std::min(lo, hi), std::max(lo, hi), 10)) {
                    axis.ticks.push_back({px(v), tick_label(v, temporal)});
                }
                if (hi != lo) axis.ticks.push_back({px(hi), tick_label(hi, temporal)});
            }
        } else {
            for (const auto& v : dom) {
                auto b = band_of(*s, dom, v);
                if (b) axis.ticks.push_back({b->start + b->bandwidth / 2, to_display(v)});
            }
        }
        sg.axes.push_back(std::move(axis));
    }
}

inline void build_legends(Scenegraph& sg, const RuntimeState& st, const MarkNode& mark)
{
    const ScaleNode* s = channel_scale(st, mark, "color");
    if (!s || s->kind != ScaleKind::OrdinalColor) return;
    Legend legend;
    legend.title = mark.channels.at("color").base.field.value_or("");
    const auto& dom = st.domains.at(scale_id("color"));
    for (const auto& v : dom) {
        Value c = apply_scale(*s, dom, v);
        legend.entries.push_back({to_display(v), c.is_string() ? c.as_string() : kDefaultFill});
    }
    sg.legends.push_back(std::move(legend));
}

inline MarkItem encode_item(const RuntimeState& st, const MarkNode& mark, const RenderedTable& t, std::size_t i)
{
    MarkItem item;
    item.kind = mark.mark.type;
    item.row = t.meta[i].source;
    item.role = t.meta[i].role;
    item.key = mark.key_field ? t.table.at(i, *mark.key_field) : Value(static_cast<double>(item.row));
    auto channel = [&](const char* name) { return resolve_channel(st, mark, t, name, i); };

    double w = mark.width, h = mark.height;
    Value xv = channel("x"), yv = channel("y");
    const ScaleNode* xs = channel_scale(st, mark, "x");
    const ScaleNode* ys = channel_scale(st, mark, "y");
    item.x = number_of(xv).value_or(mark.channels.count("x") ? std::nan("") : w / 2);
    item.y = number_of(yv).value_or(mark.channels.count("y") ? std::nan("") : h / 2);

    if (mark.mark.type == MarkType::Bar) {
        bool x_band = xs && xs->kind == ScaleKind::Band;
        bool y_band = ys && ys->kind == ScaleKind::Band;
        double thickness = mark.mark.thickness.value_or(10);
        bool horizontal = (y_band && !x_band) || (!x_band && mark.mark.orient == "horizontal");
        if (horizontal) {
            std::optional<BandGeometry> b;
            if (y_band) b = band_of(*ys, st.domains.at(scale_id("y")), t.table.at(i, *mark.channels.at("y").base.field));
            double base = xs ? baseline(st, scale_id("x")) : 0;
            double bw = b ? (mark.mark.thickness ? thickness : b->bandwidth) : thickness;
            double start = b ? b->start + (b->bandwidth - bw) / 2 : item.y - bw / 2;
            item.y = start;
            item.y2 = start + bw;
            item.x2 = std::max(item.x, base);
            item.x = std::min(item.x, base);
        } else {
            double base = ys ? baseline(st, scale_id("y")) : h;
            if (x_band) {
                auto b = band_of(*xs, st.domains.at(scale_id("x")), t.table.at(i, *mark.channels.at("x").base.field));
                double bw = b ? (mark.mark.thickness ? thickness : b->bandwidth) : thickness;
                double start = b ? b->start + (b->bandwidth - bw) / 2 : item.x;
                item.x = start;
                item.x2 = start + bw;
            } else {
                double cx = item.x;
                item.x = cx - thickness / 2;
                item.x2 = cx + thickness / 2;
            }
            item.y2 = std::max(item.y, base);
            item.y = std::min(item.y, base);
        }
    }

    Value size = channel("size");
    if (size.is_numeric()) {
        const ScaleNode* ss = channel_scale(st, mark, "size");
        auto it = mark.channels.find("size");
        bool scaled = ss && it->second.base.field;
        double r = size.as_number();
        item.size = scaled ? 3.14159265358979323846 * r * r : std::max(0.0, r);
    }
    if (mark.mark.type == MarkType::Circle && !mark.channels.count("size") && mark.mark.thickness) {
        item.size = 3.14159265358979323846 * *mark.mark.thickness * *mark.mark.thickness / 4;
    }

    Value fill = channel("color");
    if (fill.is_string()) item.fill = fill.as_string();
    else if (mark.mark.fill) item.fill = *mark.mark.fill;

    Value opacity = channel("opacity");
    double op = opacity.is_numeric() ? opacity.as_number() : mark.mark.opacity.value_or(1);
    item.opacity = std::clamp(op * t.meta[i].fade, 0.0, 1.0);

    Value shape = channel("shape");
    if (shape.is_string()) item.shape = shape.as_string();
    item.tooltip = display_of(channel("tooltip"));
    if (mark.mark.type == MarkType::Text) item.text = item.tooltip.empty() ? display_of(item.key) : item.tooltip;

    auto detail_it = mark.channels.find("detail");
    if (detail_it != mark.channels.end() && detail_it->second.base.field) {
        item.group = display_of(t.table.at(i, *detail_it->second.base.field));
    } else if (auto c = mark.channels.find("color"); c != mark.channels.end() && c->second.base.field) {
        item.group = display_of(t.table.at(i, *c->second.base.field));
    }

    bool ok = finite_in(item.x, 0, w) && finite_in(item.y, 0, h);
    if (item.x2) ok = ok && finite_in(*item.x2, 0, w);
    if (item.y2) ok = ok && finite_in(*item.y2, 0, h);
    item.clipped = !ok;
    return item;
}

} // namespace detail

// Scenegraph for an explicit table drawn with the state's scales and selections.
inline Scenegraph encode_frame(const RuntimeState& st, const RenderedTable& table)
{
    const auto& mark = st.graph->get<MarkNode>(st.graph->mark);
    Scenegraph sg;
    sg.width = mark.width;
    sg.height = mark.height;
    sg.anim_value = current_anim_value(st);
    for (std::size_t i = 0; i < table.table.size(); ++i) {
        if (!table.meta[i].visible) continue;
        sg.items.push_back(detail::encode_item(st, mark, table, i));
    }
    if (mark.mark.type == MarkType::Line) {
        // Series are drawn in first-appearance order, points left to right.
        std::vector<std::string> groups;
        for (const auto& it : sg.items) {
            if (std::find(groups.begin(), groups.end(), it.group) == groups.end()) groups.push_back(it.group);
        }
        std::vector<MarkItem> sorted;
        for (const auto& g : groups) {
            std::vector<MarkItem> series;
            for (const auto& it : sg.items) {
                if (it.group == g) series.push_back(it);
            }
            std::stable_sort(series.begin(), series.end(), [](const MarkItem& a, const MarkItem& b) {
                return a.x < b.x;
            });
            for (std::size_t k = 0; k + 1 < series.size(); ++k) {
                series[k].x2 = series[k + 1].x;
                series[k].y2 = series[k + 1].y;
            }
            sorted.insert(sorted.end(), series.begin(), series.end());
        }
        sg.items = std::move(sorted);
    }
    detail::build_axes(sg, st, mark);
    detail::build_legends(sg, st, mark);
    sg.widgets = st.widgets;
    for (const auto& [name, tuples] : st.stores) sg.selections[name] = tuples;
    return sg;
}

inline Scenegraph encode_frame(const RuntimeState& st)
{
    const auto& mark = st.graph->get<MarkNode>(st.graph->mark);
    return encode_frame(st, st.datasets.at(mark.from));
}

// ---------------------------------------------------------------------------
// Hit testing

namespace detail {

inline double segment_distance(double px, double py, double x1, double y1, double x2, double y2)
{
    double dx = x2 - x1, dy = y2 - y1;
    double len2 = dx * dx + dy * dy;
    double t = len2 == 0 ? 0 : std::clamp(((px - x1) * dx + (py - y1) * dy) / len2, 0.0, 1.0);
    double cx = x1 + t * dx - px, cy = y1 + t * dy - py;
    return std::sqrt(cx * cx + cy * cy);
}

inline bool hits(const MarkItem& it, double x, double y)
{
    if (!std::isfinite(it.x) || !std::isfinite(it.y)) return false;
    switch (it.kind) {
    case MarkType::Circle: {
        double r = std::sqrt(it.size / 3.14159265358979323846);
        return std::hypot(x - it.x, y - it.y) <= std::max(r, kHitSlop);
    }
    case MarkType::Bar:
        return x >= it.x && x <= it.x2.value_or(it.x) && y >= it.y && y <= it.y2.value_or(it.y);
    case MarkType::Line:
        if (it.x2 && it.y2) return segment_distance(x, y, it.x, it.y, *it.x2, *it.y2) <= kHitSlop;
        return std::hypot(x - it.x, y - it.y) <= kHitSlop;
    case MarkType::Text:
    case MarkType::Tick: return std::hypot(x - it.x, y - it.y) <= kHitSlop;
    }
    return false;
}

} // namespace detail

// Index of the topmost item under (x, y) in plot coordinates.
inline std::optional<std::size_t> hit_item(const Scenegraph& sg, double x, double y)
{
    for (std::size_t i = sg.items.size(); i-- > 0;) {
        if (detail::hits(sg.items[i], x, y)) return i;
    }
    return std::nullopt;
}

// Row key of the topmost item under (x, y).
inline std::optional<Value> hit_test(const Scenegraph& sg, double x, double y)
{
    auto i = hit_item(sg, x, y);
    if (!i) return std::nullopt;
    return sg.items[*i].key;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline std::string fx(double v) { return format_fixed(v, 3); }

inline std::string xml_escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string shape_path(const std::string& shape, double x, double y, double area)
{
    double r = std::sqrt(area) / 2;
    auto pt = [&](double px, double py) { return fx(px) + "," + fx(py); };
    if (shape == "triangle") {
        double h = r * 1.7320508075688772;
        return "M" + pt(x, y - h * 2 / 3) + "L" + pt(x + r, y + h / 3) + "L" + pt(x - r, y + h / 3) + "Z";
    }
    if (shape == "diamond") {
        return "M" + pt(x, y - r * 1.3) + "L" + pt(x + r, y) + "L" + pt(x, y + r * 1.3) + "L" + pt(x - r, y) + "Z";
    }
    if (shape == "cross") {
        double a = r / 3;
        return "M" + pt(x - a, y - r) + "L" + pt(x + a, y - r) + "L" + pt(x + a, y - a) + "L" + pt(x + r, y - a) + "L"
               + pt(x + r, y + a) + "L" + pt(x + a, y + a) + "L" + pt(x + a, y + r) + "L" + pt(x - a, y + r) + "L"
               + pt(x - a, y + a) + "L" + pt(x - r, y + a) + "L" + pt(x - r, y - a) + "L" + pt(x - a, y - a) + "Z";
    }
    return "M" + pt(x - r, y - r) + "L" + pt(x + r, y - r) + "L" + pt(x + r, y + r) + "L" + pt(x - r, y + r) + "Z";
}

inline void svg_item(std::string& out, const MarkItem& it)
{
    std::string style = " fill=\"" + xml_escape(it.fill) + "\" opacity=\"" + fx(it.opacity) + "\"";
    std::string title = it.tooltip.empty() ? "" : "<title>" + xml_escape(it.tooltip) + "</title>";
    // Self-closing unless there is a tooltip to nest.
    auto close = [&](const char* tag) { return title.empty() ? std::string("/>\n") : ">" + title + "</" + tag + ">\n"; };
    switch (it.kind) {
    case MarkType::Circle:
        if (it.shape == "circle") {
            out += "<circle cx=\"" + fx(it.x) + "\" cy=\"" + fx(it.y) + "\" r=\""
                   + fx(std::sqrt(it.size / 3.14159265358979323846)) + "\"" + style + close("circle");
        } else {
            out += "<path d=\"" + shape_path(it.shape, it.x, it.y, it.size) + "\"" + style + close("path");
        }
        break;
    case MarkType::Bar: {
        double x2 = it.x2.value_or(it.x), y2 = it.y2.value_or(it.y);
        out += "<rect x=\"" + fx(it.x) + "\" y=\"" + fx(it.y) + "\" width=\"" + fx(x2 - it.x) + "\" height=\""
               + fx(y2 - it.y) + "\"" + style + close("rect");
        break;
    }
    case MarkType::Line:
        out += "<circle cx=\"" + fx(it.x) + "\" cy=\"" + fx(it.y) + "\" r=\"1.500\"" + style + close("circle");
        break;
    case MarkType::Text:
        out += "<text x=\"" + fx(it.x) + "\" y=\"" + fx(it.y) + "\" text-anchor=\"middle\"" + style + ">" + title
               + xml_escape(it.text) + "</text>\n";
        break;
    case MarkType::Tick:
        out += "<line x1=\"" + fx(it.x) + "\" y1=\"" + fx(it.y - 8) + "\" x2=\"" + fx(it.x) + "\" y2=\""
               + fx(it.y + 8) + "\" stroke=\"" + xml_escape(it.fill) + "\" opacity=\"" + fx(it.opacity) + "\"" + close("line");
        break;
    }
}

inline void svg_lines(std::string& out, const Scenegraph& sg)
{
    std::string current;
    std::string d;
    const MarkItem* head = nullptr;
    auto flush = [&] {
        if (head && !d.empty()) {
            out += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + xml_escape(head->fill)
                   + "\" stroke-width=\"2.000\" opacity=\"" + fx(head->opacity) + "\"/>\n";
        }
        d.clear();
    };
    for (const auto& it : sg.items) {
        if (!std::isfinite(it.x) || !std::isfinite(it.y)) continue;
        if (!head || it.group != current) {
            flush();
            current = it.group;
            head = &it;
            d = "M" + fx(it.x) + "," + fx(it.y);
        } else {
            d += "L" + fx(it.x) + "," + fx(it.y);
        }
    }
    flush();
}

} // namespace detail

inline std::string render_svg(const Scenegraph& sg)
{
    using detail::fx;
    double total_w = sg.width + kMarginLeft + kMarginRight;
    double total_h = sg.height + kMarginTop + kMarginBottom;
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fx(total_w) + "\" height=\""
           + fx(total_h) + "\">\n";
    out += "<defs><clipPath id=\"plot\"><rect x=\"0.000\" y=\"0.000\" width=\"" + fx(sg.width) + "\" height=\""
           + fx(sg.height) + "\"/></clipPath></defs>\n";
    out += "<g transform=\"translate(" + fx(kMarginLeft) + "," + fx(kMarginTop) + ")\">\n";
    for (const auto& axis : sg.axes) {
        bool x = axis.channel == "x";
        out += "<g class=\"axis axis-" + axis.channel + "\" font-size=\"10\" fill=\"#333333\">\n";
        if (x) {
            out += "<line x1=\"0.000\" y1=\"" + fx(sg.height) + "\" x2=\"" + fx(sg.width) + "\" y2=\"" + fx(sg.height)
                   + "\" stroke=\"#888888\"/>\n";
        } else {
            out += "<line x1=\"0.000\" y1=\"0.000\" x2=\"0.000\" y2=\"" + fx(sg.height) + "\" stroke=\"#888888\"/>\n";
        }
        for (const auto& t : axis.ticks) {
            if (x) {
                out += "<line x1=\"" + fx(t.pos) + "\" y1=\"" + fx(sg.height) + "\" x2=\"" + fx(t.pos) + "\" y2=\""
                       + fx(sg.height + 5) + "\" stroke=\"#888888\"/>";
                out += "<text x=\"" + fx(t.pos) + "\" y=\"" + fx(sg.height + 16) + "\" text-anchor=\"middle\">"
                       + detail::xml_escape(t.label) + "</text>\n";
            } else {
                out += "<line x1=\"-5.000\" y1=\"" + fx(t.pos) + "\" x2=\"0.000\" y2=\"" + fx(t.pos)
                       + "\" stroke=\"#888888\"/>";
                out += "<text x=\"-7.000\" y=\"" + fx(t.pos + 3) + "\" text-anchor=\"end\">"
                       + detail::xml_escape(t.label) + "</text>\n";
            }
        }
        out += "</g>\n";
    }
    out += "<g class=\"marks\" clip-path=\"url(#plot)\">\n";
    bool line = !sg.items.empty() && sg.items.front().kind == MarkType::Line;
    if (line) detail::svg_lines(out, sg);
    for (const auto& it : sg.items) {
        if (!std::isfinite(it.x) || !std::isfinite(it.y)) continue;
        detail::svg_item(out, it);
    }
    out += "</g>\n</g>\n</svg>\n";
    return out;
}

inline std::string frame_hash(std::string_view bytes)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(bytes)));
    return buf;
}

namespace detail {

inline Json num_json(double v) { return std::isfinite(v) ? Json(std::stod(fx(v))) : Json(nullptr); }

} // namespace detail

inline Json widget_state_to_json(const WidgetState& w)
{
    Json j = widget_to_json(w.desc);
    j["value"] = value_to_json(w.value);
    return j;
}

// Structured frame document used by traces and the session service.
inline Json frame_to_json(const Scenegraph& sg)
{
    using detail::num_json;
    Json items = Json::array();
    for (const auto& it : sg.items) {
        Json j = {{"kind", to_string(it.kind)}, {"x", num_json(it.x)}, {"y", num_json(it.y)}};
        if (it.x2) j["x2"] = num_json(*it.x2);
        if (it.y2) j["y2"] = num_json(*it.y2);
        j["size"] = num_json(it.size);
        j["fill"] = it.fill;
        j["opacity"] = num_json(it.opacity);
        if (!it.text.empty()) j["text"] = it.text;
        if (it.shape != "circle") j["shape"] = it.shape;
        if (!it.tooltip.empty()) j["tooltip"] = it.tooltip;
        if (!it.group.empty()) j["group"] = it.group;
        j["key"] = value_to_json(it.key);
        j["row"] = it.row;
        j["role"] = to_string(it.role);
        if (it.clipped) j["clipped"] = true;
        items.push_back(std::move(j));
    }
    Json axes = Json::array();
    for (const auto& a : sg.axes) {
        Json ticks = Json::array();
        for (const auto& t : a.ticks) ticks.push_back({{"pos", num_json(t.pos)}, {"label", t.label}});
        axes.push_back({{"channel", a.channel}, {"title", a.title}, {"ticks", std::move(ticks)}});
    }
    Json legends = Json::array();
    for (const auto& l : sg.legends) {
        Json entries = Json::array();
        for (const auto& e : l.entries) entries.push_back({{"label", e.label}, {"color", e.color}});
        legends.push_back({{"title", l.title}, {"entries", std::move(entries)}});
    }
    Json widgets = Json::array();
    for (const auto& w : sg.widgets) widgets.push_back(widget_state_to_json(w));
    Json selections = Json::object();
    for (const auto& [name, tuples] : sg.selections) {
        Json arr = Json::array();
        for (const auto& t : tuples) arr.push_back(detail::values_to_json(t));
        selections[name] = std::move(arr);
    }
    return {{"width", sg.width},       {"height", sg.height}, {"anim_value", value_to_json(sg.anim_value)},
            {"items", std::move(items)}, {"axes", std::move(axes)}, {"legends", std::move(legends)},
            {"widgets", std::move(widgets)}, {"selections", std::move(selections)}};
}

} // namespace animflow
