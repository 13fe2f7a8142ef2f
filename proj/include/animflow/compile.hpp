#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "animflow/graph.hpp"
#include "animflow/normalize.hpp"

namespace animflow {

// Compilation failed; carries the verifier's diagnostics.
class CompileError : public Error
{
public:
    explicit CompileError(std::vector<Diagnostic> diags)
        : Error(diags.empty() ? "compile error" : to_string(diags.front())), diags_(std::move(diags))
    {
    }

    const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

inline const std::vector<std::string> kCategoryPalette{"#4c78a8", "#f58518", "#e45756", "#72b7b2", "#54a24b",
                                                       "#eeca3b", "#b279a2", "#ff9da6", "#9d755d", "#bab0ac"};
inline const std::vector<std::string> kShapes{"circle", "square", "triangle", "diamond", "cross"};
inline constexpr double kMaxRadius = 20;

// Resolved shape of the time scale.
struct TimeLayout
{
    bool continuous = false;
    std::vector<Value> domain; // discrete: every keyframe value; continuous: [lo, hi]
    double step = 0;           // discrete: ms per keyframe
    double base_ms = 0;        // cycle length before pauses
};

inline TimeLayout time_layout(const ScaleNode& s)
{
    TimeLayout t;
    t.continuous = s.continuous;
    t.domain = s.domain.values;
    if (t.continuous) {
        double lo = t.domain.size() == 2 ? t.domain[0].as_number() : 0;
        double hi = t.domain.size() == 2 ? t.domain[1].as_number() : 0;
        t.base_ms = s.duration > 0 ? s.duration : s.step * (hi - lo);
    } else {
        double n = static_cast<double>(t.domain.size());
        t.step = s.step > 0 ? s.step : (n > 0 ? s.duration / n : 0);
        t.base_ms = t.step * n;
    }
    return t;
}

// Milliseconds into the base timeline where a domain value begins.
inline double time_anchor(const TimeLayout& t, const Value& v)
{
    if (t.continuous) {
        double lo = t.domain[0].as_number(), hi = t.domain[1].as_number();
        return (v.as_number() - lo) / (hi - lo) * t.base_ms;
    }
    auto it = std::find(t.domain.begin(), t.domain.end(), v);
    if (it == t.domain.end()) throw RuntimeError("value " + to_display(v) + " is not in the time domain");
    return static_cast<double>(it - t.domain.begin()) * t.step;
}

namespace detail {

inline void push_unique(std::vector<std::string>& v, const std::string& s)
{
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

template <typename T>
T& node_ref(DataflowGraph& g, const std::string& id)
{
    auto it = g.nodes.find(id);
    if (it == g.nodes.end()) throw RuntimeError("graph has no node \"" + id + "\"");
    return std::get<T>(it->second);
}

// Ids of signals read by an expression; row fields are skipped.
inline std::vector<std::string> expr_signal_inputs(const std::string& text, const Spec& spec,
                                                   const std::string& anim_value_signal)
{
    std::vector<std::string> out;
    for (const auto& id : free_identifiers(*parse_expression(text))) {
        if (id == kAnimValue) push_unique(out, anim_value_signal);
        else if (id == kIsPlaying || spec.find_variable(id) || spec.find_selection(id)) push_unique(out, signal_id(id));
    }
    return out;
}

inline bool expr_is_animated(const std::string& text, const Spec& spec)
{
    for (const auto& id : free_identifiers(*parse_expression(text))) {
        if (id == kAnimValue) return true;
        if (const auto* s = spec.find_selection(id); s && s->animated()) return true;
    }
    return false;
}

inline bool transform_is_animated(const TransformDef& t, const Spec& spec)
{
    if (t.selection) {
        const auto* s = spec.find_selection(*t.selection);
        return s && s->animated();
    }
    return t.expr && expr_is_animated(*t.expr, spec);
}

inline TransformOp to_op(const TransformDef& t)
{
    TransformOp op;
    if (t.selection) {
        op.kind = OpKind::SelectionFilter;
        op.selection = *t.selection;
    } else {
        op.kind = OpKind::Filter;
        op.expr = *t.expr;
    }
    return op;
}

inline std::vector<std::string> op_inputs(const TransformDef& t, const Spec& spec)
{
    if (t.selection) return {signal_id(*t.selection)};
    return expr_signal_inputs(*t.expr, spec, signal_id(kAnimValue));
}

inline ScaleNode make_scale(const std::string& channel, const FieldRef& f, const Spec& spec, const DataTable& data)
{
    ScaleNode s;
    s.name = channel;
    s.channel = channel;
    FieldType type = f.type.value_or(FieldType::Nominal);
    bool discrete = is_discrete(type);
    double width = spec.width.value_or(kDefaultWidth);
    double height = spec.height.value_or(kDefaultHeight);
    bool bar = spec.mark.type == MarkType::Bar;

    s.domain.kind = discrete ? DomainKind::Distinct : DomainKind::Extent;
    s.domain.dataset = dataset_id("source");
    s.domain.field = f.field;
    if (discrete && type == FieldType::Ordinal) s.domain.sort = SortOrder::Ascending;
    if (f.sort) {
        if (const auto* order = std::get_if<SortOrder>(&*f.sort)) {
            s.domain.sort = *order;
        } else {
            s.domain.kind = DomainKind::Static;
            for (const auto& v : std::get<std::vector<Value>>(*f.sort)) {
                s.domain.values.push_back(coerce_to_column(v, data, f.field));
            }
        }
    }

    if (channel == "x" || channel == "y") {
        bool is_y = channel == "y";
        if (discrete) {
            s.kind = bar ? ScaleKind::Band : ScaleKind::Point;
        } else {
            s.kind = ScaleKind::Linear;
            // Bars grow from zero along their length axis.
            bool vertical_bars = bar && spec.mark.orient.value_or("vertical") == "vertical";
            bool length_axis = bar && (is_y ? vertical_bars : !vertical_bars);
            if (bar && !spec.mark.orient) {
                auto other = spec.encoding.find(is_y ? "x" : "y");
                bool other_discrete = other != spec.encoding.end() && other->second.base.field
                                      && is_discrete(other->second.base.field->type.value_or(FieldType::Nominal));
                length_axis = other_discrete;
            }
            s.domain.zero = length_axis;
        }
        if (is_y && !discrete) s.range = {Value(height), Value(0.0)};
        else if (is_y) s.range = {Value(0.0), Value(height)};
        else s.range = {Value(0.0), Value(width)};
    } else if (channel == "color") {
        if (discrete) {
            s.kind = ScaleKind::OrdinalColor;
            for (const auto& c : kCategoryPalette) s.range.emplace_back(c);
        } else {
            s.kind = ScaleKind::SequentialColor;
            s.range = {Value("#deebf7"), Value("#08519c")};
        }
    } else if (channel == "size") {
        s.kind = discrete ? ScaleKind::Point : ScaleKind::Sqrt;
        s.domain.zero = !discrete;
        s.range = {Value(discrete ? 2.0 : 0.0), Value(kMaxRadius)};
    } else if (channel == "opacity") {
        s.kind = discrete ? ScaleKind::Point : ScaleKind::Linear;
        s.range = {Value(0.2), Value(1.0)};
    } else if (channel == "shape") {
        s.kind = ScaleKind::Ordinal;
        for (const auto& c : kShapes) s.range.emplace_back(c);
    }

    if (f.scale) {
        const ScaleDef& u = *f.scale;
        if (u.domain) {
            s.domain = DomainSpec{};
            s.domain.kind = DomainKind::Static;
            for (const auto& v : *u.domain) s.domain.values.push_back(coerce_to_column(v, data, f.field));
        } else if (u.domain_param) {
            s.domain.kind = DomainKind::Selection;
            s.domain.selection = *u.domain_param;
            s.domain.zero = false;
        }
        if (u.range) s.range = *u.range;
        if (u.zero) s.domain.zero = *u.zero;
        if (u.reverse) s.reverse = *u.reverse;
    }

    if (s.domain.kind != DomainKind::Static) push_unique(s.inputs, s.domain.dataset);
    if (s.domain.kind == DomainKind::Selection) push_unique(s.inputs, signal_id(s.domain.selection));
    return s;
}

inline ChannelBinding make_binding(const std::string& channel, const ChannelBranch& b, bool has_scale)
{
    ChannelBinding out;
    if (b.field) {
        out.type = b.field->type.value_or(FieldType::Nominal);
        out.field = b.field->field;
        if (has_scale) out.scale = scale_id(channel);
    } else {
        out.value = b.value;
    }
    return out;
}

inline bool channel_has_scale(const std::string& channel)
{
    return channel != "tooltip" && channel != "detail";
}

inline SignalNode& add_signal(DataflowGraph& g, SignalNode s)
{
    std::string id = signal_id(s.name);
    auto [it, inserted] = g.nodes.emplace(id, std::move(s));
    if (!inserted) throw CompileError({{Severity::Error, id, "duplicate node \"" + id + "\""}});
    return std::get<SignalNode>(it->second);
}

inline void set_mark_source(DataflowGraph& g, const std::string& dataset)
{
    auto& m = node_ref<MarkNode>(g, g.mark);
    auto& in = m.inputs;
    auto it = std::find(in.begin(), in.end(), m.from);
    if (it != in.end()) *it = dataset;
    m.from = dataset;
}

} // namespace detail

// Static subgraph: source dataset with non-animated filters, interactive
// selections, variable params, scales, and the mark.
inline DataflowGraph compile_base(const NormalizedSpec& nspec, const DataTable& data)
{
    const Spec& spec = nspec.spec;
    DataflowGraph g;

    DatasetNode source;
    source.name = "source";
    source.source = "raw";
    for (const auto& t : spec.transforms) {
        if (detail::transform_is_animated(t, spec)) continue;
        source.ops.push_back(detail::to_op(t));
        for (const auto& in : detail::op_inputs(t, spec)) detail::push_unique(source.inputs, in);
    }
    g.nodes.emplace(dataset_id("source"), std::move(source));

    for (const auto& p : spec.params) {
        if (const auto* v = std::get_if<VariableParamDef>(&p)) {
            SignalNode s;
            s.name = v->name;
            s.kind = SignalKind::Param;
            s.init = v->value;
            s.update = "widget value";
            s.on = v->bind ? "widget" : "";
            detail::add_signal(g, std::move(s));
            if (v->bind) {
                WidgetDescriptor w;
                w.kind = v->bind->widget;
                w.target = v->name;
                w.init = v->value;
                if (w.kind == WidgetKind::RangeSlider) {
                    w.id = "slider:" + v->name;
                    w.min = Value(v->bind->min.value_or(0));
                    w.max = Value(v->bind->max.value_or(100));
                    w.step = Value(v->bind->step.value_or(1));
                } else {
                    w.id = "checkbox:" + v->name;
                }
                g.widgets.push_back(std::move(w));
            }
        } else {
            const auto& sel = std::get<SelectionDef>(p);
            if (sel.animated()) continue;
            SignalNode s;
            s.name = sel.name;
            s.kind = SignalKind::Selection;
            s.source = sel.on.source;
            s.on = to_string(sel.on.source);
            s.gate = sel.on.filter;
            s.update = sel.on.source == EventSource::Click ? "toggle hit row (shift: add)" : "hit row";
            s.init = Value();
            if (sel.fields) s.fields = *sel.fields;
            if (sel.predicate) s.predicate = *sel.predicate;
            if (sel.on.filter) s.inputs = detail::expr_signal_inputs(*sel.on.filter, spec, signal_id(kAnimValue));
            detail::add_signal(g, std::move(s));
        }
    }

    MarkNode mark;
    mark.name = "main";
    mark.mark = spec.mark;
    mark.from = dataset_id("source");
    mark.width = spec.width.value_or(kDefaultWidth);
    mark.height = spec.height.value_or(kDefaultHeight);
    mark.inputs.push_back(mark.from);
    for (const auto& [channel, def] : spec.encoding) {
        const FieldRef* f = def.base.field ? &*def.base.field
                            : def.condition && def.condition->branch.field ? &*def.condition->branch.field
                                                                          : nullptr;
        bool scaled = f && detail::channel_has_scale(channel);
        if (scaled) {
            ScaleNode s = detail::make_scale(channel, *f, spec, data);
            detail::push_unique(mark.inputs, scale_id(channel));
            g.nodes.emplace(scale_id(channel), std::move(s));
        }
        MarkChannel mc;
        mc.base = detail::make_binding(channel, def.base, scaled);
        if (def.condition) {
            mc.condition = def.condition->param;
            mc.when = detail::make_binding(channel, def.condition->branch, scaled);
            detail::push_unique(mark.inputs, signal_id(def.condition->param));
        }
        mark.channels.emplace(channel, std::move(mc));
    }
    g.mark = mark_id("main");
    g.nodes.emplace(g.mark, std::move(mark));
    return g;
}

namespace detail {

inline bool needs_play_control(const Spec& spec)
{
    for (const auto* s : spec.animated_selections()) {
        if (s->bind) return true;
        if (s->on.filter && free_identifiers(*parse_expression(*s->on.filter)).count(std::string(kIsPlaying))) {
            return true;
        }
    }
    return false;
}

inline bool any_bound(const Spec& spec)
{
    for (const auto* s : spec.animated_selections()) {
        if (s->bind) return true;
    }
    return false;
}

inline ScaleNode time_scale_node(const TimeEncodingDef& te)
{
    const TimeScaleDef& ts = *te.scale;
    ScaleNode s;
    s.name = "time";
    s.kind = ScaleKind::Time;
    s.channel = "time";
    s.domain.kind = DomainKind::Static;
    s.domain.values = ts.domain.value_or(std::vector<Value>{});
    s.continuous = ts.type == TimeScaleType::Linear;
    s.step = ts.step.value_or(0);
    s.duration = ts.duration.value_or(0);
    TimeLayout layout = time_layout(s);
    s.range = {Value(0.0), Value(layout.base_ms)};
    return s;
}

inline double pause_total(const SelectionDef& sel)
{
    double total = 0;
    for (const auto& p : sel.pause.value_or(std::vector<PauseEntry>{})) total += p.duration;
    return total;
}

} // namespace detail

// Raw and cycle clocks for each timer selection, plus the is_playing param
// when playback can be toggled.
inline void compile_animation_clock(DataflowGraph& g, const NormalizedSpec& nspec)
{
    const Spec& spec = nspec.spec;
    auto animated = spec.animated_selections();
    if (animated.empty() || !spec.time) return;
    TimeLayout layout = time_layout(detail::time_scale_node(*spec.time));

    bool play_control = detail::needs_play_control(spec);
    bool auto_gate = detail::any_bound(spec);
    if (play_control && !spec.find_variable(kIsPlaying)) {
        SignalNode s;
        s.name = std::string(kIsPlaying);
        s.kind = SignalKind::Param;
        s.init = Value(true);
        s.update = "widget value";
        s.on = "widget";
        detail::add_signal(g, std::move(s));
    }

    for (const auto* sel : animated) {
        std::optional<std::string> gate = sel->on.filter;
        bool gate_has_play = gate && free_identifiers(*parse_expression(*gate)).count(std::string(kIsPlaying));
        if (auto_gate && !gate_has_play) {
            gate = gate ? "(" + *gate + ") && " + std::string(kIsPlaying) : std::string(kIsPlaying);
        }
        SignalNode raw;
        raw.name = sel->name + "_raw_clock";
        raw.kind = SignalKind::RawClock;
        raw.init = Value(0.0);
        raw.update = "raw_clock + dt";
        raw.on = "timer";
        raw.gate = gate;
        raw.selection = sel->name;
        if (gate) raw.inputs = detail::expr_signal_inputs(*gate, spec, signal_id(kAnimValue));
        std::string raw_id = signal_id(raw.name);
        detail::add_signal(g, std::move(raw));

        SignalNode cycle;
        cycle.name = sel->name + "_cycle";
        cycle.kind = SignalKind::CycleClock;
        cycle.init = Value(0.0);
        cycle.cycle_ms = layout.base_ms + detail::pause_total(*sel);
        cycle.update = "raw_clock mod " + format_number(cycle.cycle_ms);
        cycle.on = raw_id;
        cycle.selection = sel->name;
        cycle.inputs = {raw_id};
        detail::add_signal(g, std::move(cycle));
    }
}

// Time scale, per-selection anim_value inversion, and the rescale rewrite of
// positional scales.
inline void compile_time_scale(DataflowGraph& g, const NormalizedSpec& nspec)
{
    const Spec& spec = nspec.spec;
    auto animated = spec.animated_selections();
    if (!spec.time || animated.empty()) return;
    ScaleNode ts = detail::time_scale_node(*spec.time);
    Value first = ts.domain.values.empty() ? Value() : ts.domain.values.front();
    g.nodes.emplace(scale_id("time"), std::move(ts));

    for (const auto* sel : animated) {
        SignalNode av;
        av.name = sel->name + "_anim_value";
        av.kind = SignalKind::AnimValue;
        av.init = first;
        av.update = "invert(scale:time, clock)";
        av.on = signal_id(sel->name + "_cycle");
        av.selection = sel->name;
        av.inputs = {signal_id(sel->name + "_cycle"), scale_id("time")};
        detail::add_signal(g, std::move(av));
    }
    g.primary_selection = animated.front()->name;
    SignalNode alias;
    alias.name = std::string(kAnimValue);
    alias.kind = SignalKind::Alias;
    alias.init = first;
    alias.update = "copy";
    alias.on = signal_id(g.primary_selection + "_anim_value");
    alias.selection = g.primary_selection;
    alias.inputs = {alias.on};
    detail::add_signal(g, std::move(alias));

    if (spec.time->rescale.value_or(false)) {
        for (const char* channel : {"x", "y"}) {
            auto it = g.nodes.find(scale_id(channel));
            if (it == g.nodes.end()) continue;
            auto& s = std::get<ScaleNode>(it->second);
            if (!is_continuous(s.kind) || s.domain.kind != DomainKind::Extent) continue;
            s.domain.rendered = true;
        }
    }
}

// Pause tables, eased effective clocks, predicate selections, and widgets.
inline void compile_animation_selections(DataflowGraph& g, const NormalizedSpec& nspec)
{
    const Spec& spec = nspec.spec;
    auto animated = spec.animated_selections();
    if (!spec.time || animated.empty()) return;
    const auto& ts = g.get<ScaleNode>(scale_id("time"));
    TimeLayout layout = time_layout(ts);

    bool checkbox_needed = false;
    for (const auto* sel : animated) {
        std::string pause_table;
        const auto& pauses = sel->pause.value_or(std::vector<PauseEntry>{});
        if (!pauses.empty()) {
            std::vector<Value> values;
            for (const auto& p : pauses) values.push_back(p.value);
            DataTable table({{"value", infer_field_type(values)},
                             {"anchor_ms", FieldType::Quantitative},
                             {"duration_ms", FieldType::Quantitative}});
            std::vector<std::pair<double, const PauseEntry*>> sorted;
            for (const auto& p : pauses) sorted.emplace_back(time_anchor(layout, p.value), &p);
            std::stable_sort(sorted.begin(), sorted.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [anchor, p] : sorted) table.add_row({p->value, Value(anchor), Value(p->duration)});
            DatasetNode d;
            d.name = sel->name + "_pauses";
            d.source = "inline";
            d.values = std::move(table);
            pause_table = dataset_id(d.name);
            g.nodes.emplace(pause_table, std::move(d));
        }

        SignalNode eff;
        eff.name = sel->name + "_clock";
        eff.kind = SignalKind::EffectiveClock;
        eff.init = Value(0.0);
        eff.easing = sel->easing.value_or("linear");
        eff.update = "ease(unpause(cycle))";
        eff.on = signal_id(sel->name + "_cycle");
        eff.selection = sel->name;
        eff.inputs = {eff.on, scale_id("time")};
        if (!pause_table.empty()) eff.inputs.push_back(pause_table);
        std::string eff_id = signal_id(eff.name);
        detail::add_signal(g, std::move(eff));
        detail::node_ref<SignalNode>(g, signal_id(sel->name + "_anim_value")).inputs[0] = eff_id;
        detail::node_ref<SignalNode>(g, signal_id(sel->name + "_anim_value")).on = eff_id;

        SignalNode s;
        s.name = sel->name;
        s.kind = SignalKind::Selection;
        s.source = EventSource::Timer;
        s.on = signal_id(sel->name + "_anim_value");
        s.update = "predicate";
        s.selection = sel->name;
        s.predicate = sel->predicate.value_or(std::vector<Comparison>{});
        if (sel->fields) s.fields = *sel->fields;
        s.inputs = {s.on};
        for (const auto& c : s.predicate) {
            for (const auto& in : detail::expr_signal_inputs(c.rhs, spec, s.on)) detail::push_unique(s.inputs, in);
        }
        detail::add_signal(g, std::move(s));

        if (sel->bind) {
            checkbox_needed = true;
            if (sel->bind->widget == WidgetKind::RangeSlider) {
                WidgetDescriptor w;
                w.id = "slider:" + sel->name;
                w.kind = WidgetKind::RangeSlider;
                w.target = sel->name;
                w.drives_clock = true;
                const auto& dom = layout.domain;
                bool numeric = !dom.empty() && dom.front().is_numeric();
                if (numeric) {
                    w.min = Value(sel->bind->min.value_or(dom.front().as_number()));
                    w.max = Value(sel->bind->max.value_or(dom.back().as_number()));
                    double step = 0;
                    if (layout.continuous) {
                        step = (dom[1].as_number() - dom[0].as_number()) / 100;
                    } else {
                        for (std::size_t i = 1; i < dom.size(); ++i) {
                            double gap = dom[i].as_number() - dom[i - 1].as_number();
                            if (gap > 0 && (step == 0 || gap < step)) step = gap;
                        }
                        if (step == 0) step = 1;
                    }
                    w.step = Value(sel->bind->step.value_or(step));
                } else {
                    w.min = Value(0.0);
                    w.max = Value(static_cast<double>(dom.empty() ? 0 : dom.size() - 1));
                    w.step = Value(1.0);
                }
                w.init = dom.empty() ? Value() : dom.front();
                g.widgets.push_back(std::move(w));
            }
        }
    }
    bool present = std::any_of(g.widgets.begin(), g.widgets.end(),
                               [](const auto& w) { return w.id == "checkbox:is_playing"; });
    if (checkbox_needed && !present) {
        WidgetDescriptor w;
        w.id = "checkbox:" + std::string(kIsPlaying);
        w.kind = WidgetKind::Checkbox;
        w.target = std::string(kIsPlaying);
        w.init = Value(true);
        g.widgets.push_back(std::move(w));
    }
}

// Keyframe dataset: the animated filters applied to the source rows.
inline void compile_filter_transforms(DataflowGraph& g, const NormalizedSpec& nspec)
{
    const Spec& spec = nspec.spec;
    DatasetNode d;
    d.name = "keyframe";
    d.source = dataset_id("source");
    d.inputs = {d.source};
    for (const auto& t : spec.transforms) {
        if (!detail::transform_is_animated(t, spec)) continue;
        d.ops.push_back(detail::to_op(t));
        for (const auto& in : detail::op_inputs(t, spec)) detail::push_unique(d.inputs, in);
    }
    if (d.ops.empty()) return;
    g.nodes.emplace(dataset_id("keyframe"), std::move(d));
    detail::set_mark_source(g, dataset_id("keyframe"));
}

// Next-keyframe dataset and the key join that interpolates between keyframes.
inline void compile_key(DataflowGraph& g, const NormalizedSpec& nspec, const DataTable& data)
{
    const Spec& spec = nspec.spec;
    if (!spec.time || !spec.time->key || !spec.time->key->has_value()) return;
    const std::string& key = **spec.time->key;
    if (!data.has_column(key)) {
        throw CompileError({{Severity::Error, "/encoding/time/key", "unknown key field \"" + key + "\""}});
    }
    detail::node_ref<MarkNode>(g, g.mark).key_field = key;
    const auto* keyframe = g.find<DatasetNode>(dataset_id("keyframe"));
    const auto* ts = g.find<ScaleNode>(scale_id("time"));
    if (!keyframe || !ts || ts->continuous || g.primary_selection.empty()) return;

    std::string clock = signal_id(g.primary_selection + "_clock");
    SignalNode next;
    next.name = g.primary_selection + "_next_value";
    next.kind = SignalKind::NextValue;
    next.init = ts->domain.values.size() > 1 ? ts->domain.values[1] : Value();
    next.update = "domain[index(anim_value) + 1]";
    next.on = clock;
    next.selection = g.primary_selection;
    next.inputs = {clock, scale_id("time")};
    std::string next_id = signal_id(next.name);
    detail::add_signal(g, std::move(next));

    SignalNode u;
    u.name = g.primary_selection + "_tween";
    u.kind = SignalKind::TweenFraction;
    u.init = Value(0.0);
    u.update = "(clock - band_start) / step";
    u.on = clock;
    u.selection = g.primary_selection;
    u.inputs = {clock, scale_id("time")};
    std::string u_id = signal_id(u.name);
    detail::add_signal(g, std::move(u));

    DatasetNode nk = *keyframe;
    nk.name = "next_keyframe";
    nk.next_keyframe = true;
    detail::push_unique(nk.inputs, next_id);
    g.nodes.emplace(dataset_id("next_keyframe"), std::move(nk));

    TransformOp join;
    join.kind = OpKind::TweenJoin;
    join.key = key;
    join.fraction = u_id;
    join.next = dataset_id("next_keyframe");
    for (const auto& [channel, def] : spec.encoding) {
        if (channel == "tooltip" || channel == "detail" || channel == "shape") continue;
        for (const ChannelBranch* b : {&def.base, def.condition ? &def.condition->branch : nullptr}) {
            if (!b || !b->field) continue;
            auto idx = data.column_index(b->field->field);
            if (!idx) continue;
            FieldType ft = data.columns()[*idx].type;
            if (ft == FieldType::Quantitative || ft == FieldType::Temporal) {
                detail::push_unique(join.fields, b->field->field);
            }
        }
    }
    std::sort(join.fields.begin(), join.fields.end());
    DatasetNode tween;
    tween.name = "tweened";
    tween.source = dataset_id("keyframe");
    tween.ops = {std::move(join)};
    tween.inputs = {dataset_id("keyframe"), dataset_id("next_keyframe"), u_id};
    g.nodes.emplace(dataset_id("tweened"), std::move(tween));
    detail::set_mark_source(g, dataset_id("tweened"));
}

// Fade overrides for rows entering or leaving between keyframes.
inline void compile_enter_exit(DataflowGraph& g, const NormalizedSpec& nspec)
{
    const Spec& spec = nspec.spec;
    if (!spec.enter && !spec.exit) return;
    if (!g.find<DatasetNode>(dataset_id("tweened"))) return;
    TransformOp op;
    op.kind = OpKind::EnterExit;
    if (spec.enter) op.enter_opacity = spec.enter->opacity;
    if (spec.exit) op.exit_opacity = spec.exit->opacity;
    const auto& tween = g.get<DatasetNode>(dataset_id("tweened"));
    op.fraction = tween.ops.front().fraction;
    DatasetNode d;
    d.name = "faded";
    d.source = dataset_id("tweened");
    d.ops = {std::move(op)};
    d.inputs = {d.source, tween.ops.front().fraction};
    g.nodes.emplace(dataset_id("faded"), std::move(d));
    detail::set_mark_source(g, dataset_id("faded"));
}

// Points rendered-extent scales at the mark's dataset and derives edges.
inline void finalize_graph(DataflowGraph& g)
{
    const auto& mark = g.get<MarkNode>(g.mark);
    std::string from = mark.from;
    for (auto& [id, node] : g.nodes) {
        auto* s = std::get_if<ScaleNode>(&node);
        if (!s || !s->domain.rendered) continue;
        s->domain.dataset = from;
        s->inputs = {from};
    }
    rebuild_edges(g);
}

inline DataflowGraph compile(const NormalizedSpec& nspec, const DataTable& data)
{
    DataflowGraph g = compile_base(nspec, data);
    compile_animation_clock(g, nspec);
    compile_time_scale(g, nspec);
    compile_animation_selections(g, nspec);
    compile_filter_transforms(g, nspec);
    compile_key(g, nspec, data);
    compile_enter_exit(g, nspec);
    finalize_graph(g);
    auto diags = verify_graph(g);
    if (has_errors(diags)) throw CompileError(std::move(diags));
    return g;
}

} // namespace animflow
