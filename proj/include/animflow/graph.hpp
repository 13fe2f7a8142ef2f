#pragma once

#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "animflow/spec.hpp"

namespace animflow {

enum class SignalKind
{
    Param,          // variable parameter, set by widgets
    Selection,      // selection membership (predicate or point store)
    RawClock,       // accumulated timer dt, gated by the event-stream filter
    CycleClock,     // raw clock modulo the cycle length
    EffectiveClock, // cycle clock after pause plateaus and easing
    AnimValue,      // effective clock inverted through the time scale
    NextValue,      // domain value of the following keyframe
    TweenFraction,  // position within the current keyframe band, in [0, 1)
    Alias           // mirrors another signal
};

inline const char* to_string(SignalKind k)
{
    switch (k) {
    case SignalKind::Param: return "param";
    case SignalKind::Selection: return "selection";
    case SignalKind::RawClock: return "raw_clock";
    case SignalKind::CycleClock: return "cycle_clock";
    case SignalKind::EffectiveClock: return "effective_clock";
    case SignalKind::AnimValue: return "anim_value";
    case SignalKind::NextValue: return "next_value";
    case SignalKind::TweenFraction: return "tween_fraction";
    case SignalKind::Alias: return "alias";
    }
    return "?";
}

struct SignalNode
{
    std::string name;
    SignalKind kind = SignalKind::Param;
    Value init;
    std::string update;              // readable update rule
    std::string on;                  // event source or upstream node id
    std::optional<std::string> gate; // expression filtering incoming events
    std::string selection;           // owning selection of clock-family signals

    // Selection payload.
    EventSource source = EventSource::Timer;
    std::vector<Comparison> predicate;
    std::vector<std::string> fields;

    // Clock payload.
    double cycle_ms = 0;
    std::string easing;

    std::vector<std::string> inputs;
};

enum class OpKind
{
    Filter,          // expression over row fields and signals
    SelectionFilter, // rows in a selection
    TweenJoin,       // join with the next keyframe on the key, interpolate
    EnterExit        // fade overrides for entering / exiting rows
};

inline const char* to_string(OpKind k)
{
    switch (k) {
    case OpKind::Filter: return "filter";
    case OpKind::SelectionFilter: return "selection_filter";
    case OpKind::TweenJoin: return "tween_join";
    case OpKind::EnterExit: return "enter_exit";
    }
    return "?";
}

struct TransformOp
{
    OpKind kind = OpKind::Filter;
    std::string expr;
    std::string selection;
    std::string key;
    std::string fraction;            // signal id holding u
    std::string next;                // dataset id of the next keyframe
    std::vector<std::string> fields; // interpolated fields
    std::optional<double> enter_opacity;
    std::optional<double> exit_opacity;
};

struct DatasetNode
{
    std::string name;
    std::string source; // "raw", "inline", or an upstream dataset id
    std::vector<TransformOp> ops;
    bool next_keyframe = false; // evaluate selections at their next keyframe value
    std::optional<DataTable> values;
    std::vector<std::string> inputs;
};

enum class ScaleKind
{
    Linear,
    Sqrt,
    Point,
    Band,
    Ordinal,
    OrdinalColor,
    SequentialColor,
    Time
};

inline const char* to_string(ScaleKind k)
{
    switch (k) {
    case ScaleKind::Linear: return "linear";
    case ScaleKind::Sqrt: return "sqrt";
    case ScaleKind::Point: return "point";
    case ScaleKind::Band: return "band";
    case ScaleKind::Ordinal: return "ordinal";
    case ScaleKind::OrdinalColor: return "ordinal-color";
    case ScaleKind::SequentialColor: return "sequential-color";
    case ScaleKind::Time: return "time";
    }
    return "?";
}

inline bool is_continuous(ScaleKind k)
{
    return k == ScaleKind::Linear || k == ScaleKind::Sqrt || k == ScaleKind::SequentialColor;
}

enum class DomainKind
{
    Static,    // literal values
    Extent,    // [min, max] of a field over a dataset
    Distinct,  // distinct values of a field over a dataset
    Selection  // extent of a field over raw rows in a selection
};

inline const char* to_string(DomainKind k)
{
    switch (k) {
    case DomainKind::Static: return "static";
    case DomainKind::Extent: return "extent";
    case DomainKind::Distinct: return "distinct";
    case DomainKind::Selection: return "selection";
    }
    return "?";
}

struct DomainSpec
{
    DomainKind kind = DomainKind::Static;
    std::vector<Value> values;
    std::string dataset;
    std::string field;
    std::string selection;
    bool zero = false;
    bool rendered = false;           // Extent over whatever dataset the mark draws
    std::optional<SortOrder> sort;   // Distinct: sorted instead of first appearance
};

struct ScaleNode
{
    std::string name;
    ScaleKind kind = ScaleKind::Linear;
    std::string channel;
    DomainSpec domain;
    std::vector<Value> range;
    bool reverse = false;
    bool continuous = false; // time scales: continuous domain
    double step = 0;         // time scales: ms per band
    double duration = 0;     // time scales: total ms
    std::vector<std::string> inputs;
};

struct ChannelBinding
{
    FieldType type = FieldType::Nominal;
    std::optional<std::string> field;
    std::optional<std::string> scale; // scale node id
    std::optional<Value> value;
};

struct MarkChannel
{
    ChannelBinding base;
    std::optional<std::string> condition; // selection name
    std::optional<ChannelBinding> when;   // branch used while the condition holds
};

struct MarkNode
{
    std::string name;
    MarkDef mark;
    std::string from;
    std::map<std::string, MarkChannel> channels;
    std::optional<std::string> key_field;
    double width = kDefaultWidth;
    double height = kDefaultHeight;
    std::vector<std::string> inputs;
};

using Node = std::variant<SignalNode, DatasetNode, ScaleNode, MarkNode>;

inline const std::vector<std::string>& node_inputs(const Node& n)
{
    return std::visit([](const auto& x) -> const std::vector<std::string>& { return x.inputs; }, n);
}

struct WidgetDescriptor
{
    std::string id;
    WidgetKind kind = WidgetKind::RangeSlider;
    std::string target; // selection or param name
    bool drives_clock = false;
    Value min;
    Value max;
    Value step;
    Value init;
};

inline const char* widget_kind_name(WidgetKind k)
{
    return k == WidgetKind::RangeSlider ? "range-slider" : "checkbox";
}

struct DataflowGraph
{
    std::map<std::string, Node> nodes;
    std::vector<std::pair<std::string, std::string>> edges; // producer -> consumer
    std::vector<std::string> roots;
    std::vector<WidgetDescriptor> widgets;
    std::string primary_selection; // timer selection driving the time encoding
    std::string mark;              // id of the mark node

    template <typename T>
    const T* find(const std::string& id) const
    {
        auto it = nodes.find(id);
        return it == nodes.end() ? nullptr : std::get_if<T>(&it->second);
    }

    template <typename T>
    const T& get(const std::string& id) const
    {
        const T* p = find<T>(id);
        if (!p) throw RuntimeError("graph has no node \"" + id + "\" of the expected kind");
        return *p;
    }
};

inline std::string signal_id(std::string_view name) { return "signal:" + std::string(name); }
inline std::string dataset_id(std::string_view name) { return "data:" + std::string(name); }
inline std::string scale_id(std::string_view name) { return "scale:" + std::string(name); }
inline std::string mark_id(std::string_view name) { return "mark:" + std::string(name); }

// Rebuilds edges and roots from each node's inputs. Edges are ordered by
// consumer id, then by input order.
inline void rebuild_edges(DataflowGraph& g)
{
    g.edges.clear();
    g.roots.clear();
    for (const auto& [id, node] : g.nodes) {
        for (const auto& in : node_inputs(node)) g.edges.emplace_back(in, id);
        if (const auto* s = std::get_if<SignalNode>(&node)) {
            bool event_source = s->kind == SignalKind::RawClock
                                || (s->kind == SignalKind::Selection && s->source != EventSource::Timer)
                                || s->kind == SignalKind::Param;
            if (event_source) g.roots.push_back(id);
        }
    }
}

// Kahn's algorithm with ties broken by node id. Returns nullopt on a cycle.
inline std::optional<std::vector<std::string>> topological_order(const DataflowGraph& g)
{
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [id, _] : g.nodes) indegree[id] = 0;
    for (const auto& [from, to] : g.edges) {
        if (!g.nodes.count(from) || !g.nodes.count(to)) continue;
        ++indegree[to];
        out[from].push_back(to);
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [id, d] : indegree) {
        if (d == 0) ready.push(id);
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string id = ready.top();
        ready.pop();
        order.push_back(id);
        for (const auto& next : out[id]) {
            if (--indegree[next] == 0) ready.push(next);
        }
    }
    if (order.size() != g.nodes.size()) return std::nullopt;
    return order;
}

// Checks reference integrity, acyclicity, and one raw clock per animated selection.
inline std::vector<Diagnostic> verify_graph(const DataflowGraph& g)
{
    std::vector<Diagnostic> diags;
    for (const auto& [from, to] : g.edges) {
        if (!g.nodes.count(from)) {
            diags.push_back({Severity::Error, to, "dangling reference to \"" + from + "\""});
        }
        if (!g.nodes.count(to)) {
            diags.push_back({Severity::Error, from, "edge into missing node \"" + to + "\""});
        }
    }
    for (const auto& [id, node] : g.nodes) {
        if (const auto* m = std::get_if<MarkNode>(&node)) {
            auto check = [&](const ChannelBinding& b) {
                if (b.scale && !g.find<ScaleNode>(*b.scale)) {
                    diags.push_back({Severity::Error, id, "dangling scale reference \"" + *b.scale + "\""});
                }
            };
            for (const auto& [_, ch] : m->channels) {
                check(ch.base);
                if (ch.when) check(*ch.when);
            }
            if (!g.find<DatasetNode>(m->from)) {
                diags.push_back({Severity::Error, id, "dangling dataset reference \"" + m->from + "\""});
            }
        }
    }
    if (!topological_order(g)) {
        // Report the nodes left on the cycle.
        std::map<std::string, int> indegree;
        for (const auto& [id, _] : g.nodes) indegree[id] = 0;
        for (const auto& [from, to] : g.edges) {
            if (g.nodes.count(from) && g.nodes.count(to)) ++indegree[to];
        }
        std::vector<std::string> stack;
        for (const auto& [id, d] : indegree) {
            if (d == 0) stack.push_back(id);
        }
        std::set<std::string> done;
        while (!stack.empty()) {
            auto id = stack.back();
            stack.pop_back();
            done.insert(id);
            for (const auto& [from, to] : g.edges) {
                if (from == id && g.nodes.count(to) && --indegree[to] == 0) stack.push_back(to);
            }
        }
        std::string members;
        for (const auto& [id, _] : g.nodes) {
            if (!done.count(id)) members += (members.empty() ? "" : ", ") + id;
        }
        diags.push_back({Severity::Error, "", "cycle through nodes " + members});
    }
    std::map<std::string, int> clocks;
    for (const auto& [id, node] : g.nodes) {
        const auto* s = std::get_if<SignalNode>(&node);
        if (!s) continue;
        if (s->kind == SignalKind::Selection && s->source == EventSource::Timer) clocks.emplace(s->name, 0);
    }
    for (const auto& [id, node] : g.nodes) {
        const auto* s = std::get_if<SignalNode>(&node);
        if (s && s->kind == SignalKind::RawClock) ++clocks[s->selection];
    }
    for (const auto& [sel, count] : clocks) {
        if (count != 1) {
            diags.push_back({Severity::Error, signal_id(sel),
                             "animated selection has " + std::to_string(count) + " clock signals (expected 1)"});
        }
    }
    return diags;
}

// ---------------------------------------------------------------------------
// IR document

namespace detail {

inline Json binding_to_json(const ChannelBinding& b)
{
    Json j = {{"type", to_string(b.type)}};
    if (b.field) j["field"] = *b.field;
    if (b.scale) j["scale"] = *b.scale;
    if (b.value) j["value"] = value_to_json(*b.value);
    return j;
}

inline Json node_to_json(const std::string& id, const Node& node)
{
    Json j = {{"id", id}};
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, SignalNode>) {
                j["type"] = "signal";
                j["name"] = n.name;
                j["kind"] = to_string(n.kind);
                j["init"] = value_to_json(n.init);
                j["update"] = n.update;
                if (!n.on.empty()) j["on"] = n.on;
                if (n.gate) j["gate"] = *n.gate;
                if (!n.selection.empty()) j["selection"] = n.selection;
                if (n.kind == SignalKind::Selection) {
                    j["source"] = to_string(n.source);
                    Json preds = Json::array();
                    for (const auto& c : n.predicate) {
                        preds.push_back({{"field", c.field}, {"op", to_string(c.op)}, {"rhs", c.rhs}});
                    }
                    j["predicate"] = std::move(preds);
                    j["fields"] = n.fields;
                }
                if (n.kind == SignalKind::CycleClock) j["cycle_ms"] = n.cycle_ms;
                if (n.kind == SignalKind::EffectiveClock) j["easing"] = n.easing;
            } else if constexpr (std::is_same_v<T, DatasetNode>) {
                j["type"] = "dataset";
                j["name"] = n.name;
                j["source"] = n.source;
                Json ops = Json::array();
                for (const auto& op : n.ops) {
                    Json o = {{"op", to_string(op.kind)}};
                    if (!op.expr.empty()) o["expr"] = op.expr;
                    if (!op.selection.empty()) o["selection"] = op.selection;
                    if (!op.key.empty()) o["key"] = op.key;
                    if (!op.fraction.empty()) o["fraction"] = op.fraction;
                    if (!op.next.empty()) o["next"] = op.next;
                    if (!op.fields.empty()) o["fields"] = op.fields;
                    if (op.enter_opacity) o["enter_opacity"] = *op.enter_opacity;
                    if (op.exit_opacity) o["exit_opacity"] = *op.exit_opacity;
                    ops.push_back(std::move(o));
                }
                j["ops"] = std::move(ops);
                if (n.next_keyframe) j["next_keyframe"] = true;
                if (n.values) j["values"] = table_to_json(*n.values);
            } else if constexpr (std::is_same_v<T, ScaleNode>) {
                j["type"] = "scale";
                j["name"] = n.name;
                j["kind"] = to_string(n.kind);
                if (!n.channel.empty()) j["channel"] = n.channel;
                Json d = {{"kind", to_string(n.domain.kind)}};
                if (n.domain.kind == DomainKind::Static) d["values"] = detail::values_to_json(n.domain.values);
                if (!n.domain.dataset.empty()) d["dataset"] = n.domain.dataset;
                if (!n.domain.field.empty()) d["field"] = n.domain.field;
                if (!n.domain.selection.empty()) d["selection"] = n.domain.selection;
                if (n.domain.zero) d["zero"] = true;
                if (n.domain.rendered) d["rendered"] = true;
                if (n.domain.sort) d["sort"] = *n.domain.sort == SortOrder::Ascending ? "ascending" : "descending";
                j["domain"] = std::move(d);
                j["range"] = detail::values_to_json(n.range);
                if (n.reverse) j["reverse"] = true;
                if (n.kind == ScaleKind::Time) {
                    j["continuous"] = n.continuous;
                    if (n.step > 0) j["step"] = n.step;
                    if (n.duration > 0) j["duration"] = n.duration;
                }
            } else {
                j["type"] = "mark";
                j["name"] = n.name;
                j["mark"] = to_string(n.mark.type);
                j["from"] = n.from;
                Json chans = Json::object();
                for (const auto& [name, ch] : n.channels) {
                    Json c = binding_to_json(ch.base);
                    if (ch.condition) {
                        c["condition"] = {{"selection", *ch.condition}};
                        if (ch.when) c["condition"]["branch"] = binding_to_json(*ch.when);
                    }
                    chans[name] = std::move(c);
                }
                j["channels"] = std::move(chans);
                j["key"] = n.key_field ? Json(*n.key_field) : Json(nullptr);
                j["width"] = n.width;
                j["height"] = n.height;
            }
            j["inputs"] = n.inputs;
        },
        node);
    return j;
}

} // namespace detail

inline Json widget_to_json(const WidgetDescriptor& w)
{
    return {{"id", w.id},
            {"kind", widget_kind_name(w.kind)},
            {"target", w.target},
            {"drives_clock", w.drives_clock},
            {"min", value_to_json(w.min)},
            {"max", value_to_json(w.max)},
            {"step", value_to_json(w.step)},
            {"init", value_to_json(w.init)}};
}

inline Json to_json(const DataflowGraph& g)
{
    Json nodes = Json::array();
    for (const auto& [id, node] : g.nodes) nodes.push_back(detail::node_to_json(id, node));
    Json edges = Json::array();
    for (const auto& [from, to] : g.edges) edges.push_back({from, to});
    Json widgets = Json::array();
    for (const auto& w : g.widgets) widgets.push_back(widget_to_json(w));
    return {{"nodes", std::move(nodes)},
            {"edges", std::move(edges)},
            {"roots", g.roots},
            {"widgets", std::move(widgets)},
            {"primary_selection", g.primary_selection},
            {"mark", g.mark}};
}

} // namespace animflow
