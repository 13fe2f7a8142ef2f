#pragma once

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "animflow/scenegraph.hpp"

namespace animflow {

struct TimerEvent
{
    double dt = 0;
};

struct PointerMoveEvent
{
    double x = 0;
    double y = 0;
};

struct ClickEvent
{
    double x = 0;
    double y = 0;
    std::set<std::string> modifiers;
};

struct WidgetSetEvent
{
    std::string id;
    Value value;
};

using Event = std::variant<TimerEvent, PointerMoveEvent, ClickEvent, WidgetSetEvent>;

inline Event event_from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw SchemaError("/event", "event needs a string \"type\"");
    }
    std::string type = j["type"];
    auto number = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) {
            throw SchemaError(std::string("/event/") + key, "expected a number");
        }
        return j[key].get<double>();
    };
    if (type == "timer") {
        double dt = number("dt");
        if (dt < 0) throw SchemaError("/event/dt", "dt must be non-negative");
        return TimerEvent{dt};
    }
    if (type == "pointermove" || type == "mousemove") return PointerMoveEvent{number("x"), number("y")};
    if (type == "click") {
        ClickEvent e{number("x"), number("y"), {}};
        if (j.contains("modifiers")) {
            if (!j["modifiers"].is_array()) throw SchemaError("/event/modifiers", "expected an array");
            for (const auto& m : j["modifiers"]) {
                if (!m.is_string()) throw SchemaError("/event/modifiers", "expected strings");
                e.modifiers.insert(m.get<std::string>());
            }
        }
        return e;
    }
    if (type == "widget_set") {
        if (!j.contains("id") || !j["id"].is_string()) throw SchemaError("/event/id", "expected a widget id");
        return WidgetSetEvent{j["id"].get<std::string>(), value_from_json(j.value("value", Json()), "/event/value")};
    }
    throw SchemaError("/event/type", "unknown event type \"" + type + "\"");
}

inline Json event_to_json(const Event& e)
{
    return std::visit(
        [](const auto& ev) -> Json {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, TimerEvent>) {
                return {{"type", "timer"}, {"dt", ev.dt}};
            } else if constexpr (std::is_same_v<T, PointerMoveEvent>) {
                return {{"type", "pointermove"}, {"x", ev.x}, {"y", ev.y}};
            } else if constexpr (std::is_same_v<T, ClickEvent>) {
                return {{"type", "click"}, {"x", ev.x}, {"y", ev.y},
                        {"modifiers", std::vector<std::string>(ev.modifiers.begin(), ev.modifiers.end())}};
            } else {
                return {{"type", "widget_set"}, {"id", ev.id}, {"value", value_to_json(ev.value)}};
            }
        },
        e);
}

namespace detail {

inline bool in_viewport(const RuntimeState& st, double x, double y)
{
    const auto& mark = st.graph->get<MarkNode>(st.graph->mark);
    return x >= 0 && y >= 0 && x <= mark.width && y <= mark.height;
}

inline bool selection_gate_open(const RuntimeState& st, const SignalNode& s)
{
    if (!s.gate) return true;
    EvalContext ctx{st};
    return truthy(eval_in(ctx, *s.gate, nullptr));
}

inline void pointer_event(RuntimeState& st, EventSource source, double x, double y,
                          const std::set<std::string>& modifiers)
{
    std::optional<std::size_t> row;
    if (in_viewport(st, x, y)) {
        Scenegraph sg = encode_frame(st);
        if (auto i = hit_item(sg, x, y)) row = sg.items[*i].row;
    }
    bool changed = false;
    for (const auto& [id, node] : st.graph->nodes) {
        const auto* s = std::get_if<SignalNode>(&node);
        if (!s || s->kind != SignalKind::Selection || s->source != source) continue;
        if (!selection_gate_open(st, *s)) continue;
        auto& store = st.stores[s->name];
        std::vector<Row> before = store;
        if (!row) {
            if (!modifiers.count("shift")) store.clear();
        } else {
            Row tuple = project(st, *s, *row);
            auto it = std::find(store.begin(), store.end(), tuple);
            if (source == EventSource::Click && modifiers.count("shift")) {
                if (it == store.end()) store.push_back(std::move(tuple));
                else store.erase(it);
            } else {
                store = {std::move(tuple)};
            }
        }
        changed = changed || store != before;
    }
    if (changed) propagate(st);
}

inline void widget_event(RuntimeState& st, const WidgetSetEvent& e)
{
    auto w = std::find_if(st.widgets.begin(), st.widgets.end(), [&](const auto& x) { return x.desc.id == e.id; });
    if (w == st.widgets.end()) throw RuntimeError("unknown widget id \"" + e.id + "\"");
    if (w->desc.drives_clock) {
        // Scrubbing hands control to the user: every timer clock jumps to the
        // value and playback stops.
        for (const auto& [id, node] : st.graph->nodes) {
            const auto* s = std::get_if<SignalNode>(&node);
            if (!s || s->kind != SignalKind::RawClock) continue;
            st.signals[s->name] = Value(clock_for_value(st, s->selection, e.value));
        }
        if (st.signals.count(kIsPlaying)) st.signals[std::string(kIsPlaying)] = Value(false);
    } else if (w->desc.kind == WidgetKind::Checkbox) {
        st.signals[w->desc.target] = Value(truthy(e.value));
    } else {
        st.signals[w->desc.target] = e.value;
    }
    propagate(st);
}

} // namespace detail

inline void inject_event(RuntimeState& st, const Event& e)
{
    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, TimerEvent>) {
                advance(st, ev.dt);
            } else if constexpr (std::is_same_v<T, PointerMoveEvent>) {
                detail::pointer_event(st, EventSource::PointerMove, ev.x, ev.y, {});
            } else if constexpr (std::is_same_v<T, ClickEvent>) {
                detail::pointer_event(st, EventSource::Click, ev.x, ev.y, ev.modifiers);
            } else {
                detail::widget_event(st, ev);
            }
        },
        e);
}

// ---------------------------------------------------------------------------
// Event traces

struct TraceRecord
{
    double t_offset_ms = 0;
    Event event;
};

// Newline-delimited records {"t_offset_ms": ..., "event": {...}}; blank lines skipped.
inline std::vector<TraceRecord> parse_trace(std::string_view text)
{
    std::vector<TraceRecord> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    double last = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& err) {
            throw SyntaxError("trace line " + std::to_string(line_no) + ": invalid JSON", err.byte);
        }
        std::string at = "/" + std::to_string(line_no - 1);
        if (!j.is_object() || !j.contains("t_offset_ms") || !j["t_offset_ms"].is_number()) {
            throw SchemaError(at + "/t_offset_ms", "expected a number");
        }
        double t = j["t_offset_ms"];
        if (t < last) throw SchemaError(at + "/t_offset_ms", "offsets must be non-decreasing");
        last = t;
        if (!j.contains("event")) throw SchemaError(at + "/event", "missing event");
        try {
            out.push_back({t, event_from_json(j["event"])});
        } catch (const SchemaError& err) {
            throw SchemaError(at + err.path(), err.what());
        }
        if (end == text.size()) break;
    }
    return out;
}

inline std::string trace_to_text(const std::vector<TraceRecord>& trace)
{
    std::string out;
    for (const auto& r : trace) {
        Json j = {{"t_offset_ms", r.t_offset_ms}, {"event", event_to_json(r.event)}};
        out += j.dump() + "\n";
    }
    return out;
}

// Applies records in order, advancing by the gap between consecutive offsets,
// and calls `on_frame` after each record and once more at the end.
template <typename OnFrame>
void replay_trace(RuntimeState& st, const std::vector<TraceRecord>& trace, OnFrame&& on_frame)
{
    double now = 0;
    for (const auto& r : trace) {
        if (r.t_offset_ms > now) advance(st, r.t_offset_ms - now);
        now = std::max(now, r.t_offset_ms);
        inject_event(st, r.event);
        on_frame(st);
    }
    on_frame(st);
}

} // namespace animflow
