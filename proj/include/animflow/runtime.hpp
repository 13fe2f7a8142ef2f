#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "animflow/compile.hpp"
#include "animflow/easing.hpp"

namespace animflow {

enum class RowRole
{
    Update, // present in the current keyframe (and the next one, when tweening)
    Enter,  // only in the next keyframe
    Exit    // only in the current keyframe
};

inline const char* to_string(RowRole r)
{
    switch (r) {
    case RowRole::Update: return "update";
    case RowRole::Enter: return "enter";
    case RowRole::Exit: return "exit";
    }
    return "?";
}

struct RowMeta
{
    std::size_t source = 0; // index into the raw table
    RowRole role = RowRole::Update;
    double fade = 1;        // opacity multiplier from enter/exit encodings
    bool visible = true;

    friend bool operator==(const RowMeta&, const RowMeta&) = default;
};

// A materialized dataset plus per-row provenance.
struct RenderedTable
{
    DataTable table;
    std::vector<RowMeta> meta;

    friend bool operator==(const RenderedTable&, const RenderedTable&) = default;
};

struct WidgetState
{
    WidgetDescriptor desc;
    Value value;
};

struct RuntimeState
{
    std::shared_ptr<const DataflowGraph> graph;
    std::shared_ptr<const DataTable> data;
    std::shared_ptr<const std::map<std::string, ExprPtr, std::less<>>> exprs;
    std::vector<std::string> order;
    std::map<std::string, Value, std::less<>> signals;       // by signal name
    std::map<std::string, std::vector<Row>, std::less<>> stores; // projected tuples of point selections
    std::map<std::string, RenderedTable> datasets;           // by dataset id
    std::map<std::string, std::vector<Value>> domains;       // by scale id
    std::vector<WidgetState> widgets;
    std::optional<TimeLayout> time;

    // Raw clock of the primary timer selection; 0 for graphs without one.
    double raw_clock() const
    {
        if (!graph || graph->primary_selection.empty()) return 0;
        auto it = signals.find(graph->primary_selection + "_raw_clock");
        return it == signals.end() ? 0 : it->second.as_number();
    }

    const Value& signal(std::string_view name) const
    {
        auto it = signals.find(name);
        if (it == signals.end()) throw RuntimeError("unknown signal \"" + std::string(name) + "\"");
        return it->second;
    }
};

// ---------------------------------------------------------------------------
// Clock arithmetic

struct PauseWindow
{
    double anchor = 0;   // ms into the base timeline where the plateau sits
    double duration = 0; // ms
};

inline constexpr double kClockResolution = 1e6; // ticks per ms

// Snaps a clock reading to a nanosecond grid so accumulated dt rounding does
// not change which band a frame lands in.
inline double quantize_clock(double ms)
{
    return std::round(ms * kClockResolution) / kClockResolution;
}

inline double cycle_clock(double raw, double cycle_ms)
{
    if (!(cycle_ms > 0)) return 0;
    double c = quantize_clock(std::fmod(raw, cycle_ms));
    if (c >= cycle_ms) c -= cycle_ms;
    return c < 0 ? 0 : c;
}

namespace detail {

// Raw-time position in the eased, unpaused timeline where the base clock reaches `anchor`.
inline double eased_anchor(double anchor, double base_ms, Easing e)
{
    if (e == Easing::Linear || !(base_ms > 0)) return anchor;
    return base_ms * invert_easing(e, anchor / base_ms);
}

inline double eased(double r, double base_ms, Easing e)
{
    if (e == Easing::Linear || !(base_ms > 0)) return r;
    return base_ms * ease(e, std::clamp(r / base_ms, 0.0, 1.0));
}

} // namespace detail

// Maps a cycle clock in [0, T + sum(pauses)) to the base timeline [0, T).
// Pauses are plateaus held exactly at their anchor; easing reshapes the rest.
inline double effective_clock(double cycle, double base_ms, const std::vector<PauseWindow>& pauses, Easing e)
{
    double offset = 0;
    for (const auto& p : pauses) {
        double start = detail::eased_anchor(p.anchor, base_ms, e) + offset;
        if (cycle < start) break;
        if (cycle < start + p.duration) return p.anchor;
        offset += p.duration;
    }
    return detail::eased(cycle - offset, base_ms, e);
}

// Inverse of effective_clock at plateau starts: the cycle clock at which the
// base timeline first reaches `base`.
inline double cycle_position(double base, double base_ms, const std::vector<PauseWindow>& pauses, Easing e)
{
    double r = detail::eased_anchor(base, base_ms, e);
    for (const auto& p : pauses) {
        if (p.anchor < base) r += p.duration;
    }
    return r;
}

struct BandPosition
{
    std::size_t index = 0;
    double fraction = 0; // 0 when there is no next keyframe
    bool has_next = false;
};

inline BandPosition band_position(const TimeLayout& t, double clock)
{
    BandPosition b;
    if (t.continuous || t.domain.empty() || !(t.step > 0)) return b;
    double n = static_cast<double>(t.domain.size());
    double i = std::floor(clock / t.step);
    i = std::clamp(i, 0.0, n - 1);
    b.index = static_cast<std::size_t>(i);
    b.has_next = b.index + 1 < t.domain.size();
    if (b.has_next) b.fraction = std::clamp((clock - i * t.step) / t.step, 0.0, 1.0);
    return b;
}

// Inverts the time scale: the data-domain value shown at an effective clock.
inline Value invert_time(const TimeLayout& t, double clock)
{
    if (t.domain.empty()) return Value();
    if (t.continuous) {
        double lo = t.domain[0].as_number(), hi = t.domain[1].as_number();
        double v = t.base_ms > 0 ? lo + clock / t.base_ms * (hi - lo) : lo;
        if (t.domain[0].is_timestamp()) return Value(Timestamp{v});
        return Value(v);
    }
    return t.domain[band_position(t, clock).index];
}

namespace detail {

inline std::vector<PauseWindow> pause_windows(const RuntimeState& st, const SignalNode& eff)
{
    std::vector<PauseWindow> out;
    for (const auto& in : eff.inputs) {
        const auto* d = st.graph->find<DatasetNode>(in);
        if (!d || !d->values) continue;
        for (const auto& row : d->values->rows()) out.push_back({row[1].as_number(), row[2].as_number()});
    }
    return out;
}

inline const TimeLayout& layout_of(const RuntimeState& st)
{
    if (!st.time) throw RuntimeError("graph has no time scale");
    return *st.time;
}

} // namespace detail

inline TimeLayout runtime_time_layout(const RuntimeState& st)
{
    return detail::layout_of(st);
}

// ---------------------------------------------------------------------------
// Expressions and selections

namespace detail {

inline const Expr& cached_expr(const RuntimeState& st, const std::string& text)
{
    auto it = st.exprs->find(text);
    if (it == st.exprs->end()) throw RuntimeError("expression was not compiled: " + text);
    return *it->second;
}

struct EvalContext
{
    const RuntimeState& st;
    const Row* row = nullptr;
    const DataTable* table = nullptr;
    std::size_t source = 0;
    const Value* anim_override = nullptr;
};

} // namespace detail

inline bool evaluate_selection(const RuntimeState& st, const std::string& name, const DataTable& table,
                               std::size_t row, std::size_t source, const Value* anim_override = nullptr);

namespace detail {

inline Value eval_in(const EvalContext& ctx, const std::string& text, const Value* anim_value)
{
    Value scratch;
    Resolver resolve = [&](std::string_view id) -> const Value* {
        if (ctx.row && ctx.table) {
            if (auto idx = ctx.table->column_index(id)) return &(*ctx.row)[*idx];
        }
        if (id == kAnimValue) {
            if (anim_value) return anim_value;
            if (ctx.anim_override) return ctx.anim_override;
        }
        if (const auto* s = ctx.st.graph->find<SignalNode>(signal_id(id)); s && s->kind == SignalKind::Selection) {
            if (ctx.row && ctx.table) {
                std::size_t r = static_cast<std::size_t>(ctx.row - ctx.table->rows().data());
                scratch = Value(evaluate_selection(ctx.st, std::string(id), *ctx.table, r, ctx.source,
                                                   ctx.anim_override));
            } else {
                auto store = ctx.st.stores.find(id);
                scratch = Value(store != ctx.st.stores.end() && !store->second.empty());
            }
            return &scratch;
        }
        auto it = ctx.st.signals.find(id);
        return it == ctx.st.signals.end() ? nullptr : &it->second;
    };
    return eval_expression(cached_expr(ctx.st, text), resolve);
}

inline bool compare(const Value& lhs, CompareOp op, const Value& rhs)
{
    if (lhs.is_null() || rhs.is_null()) return op == CompareOp::Eq && lhs.is_null() && rhs.is_null();
    auto c = compare_values(lhs, rhs);
    switch (op) {
    case CompareOp::Eq: return c == 0;
    case CompareOp::Lt: return c < 0;
    case CompareOp::Lte: return c <= 0;
    case CompareOp::Gt: return c > 0;
    case CompareOp::Gte: return c >= 0;
    }
    return false;
}

// The tuple a point selection stores for a row.
inline Row project(const RuntimeState& st, const SignalNode& sel, std::size_t source)
{
    Row out;
    const DataTable& data = *st.data;
    if (!sel.fields.empty()) {
        for (const auto& f : sel.fields) out.push_back(data.at(source, f));
        return out;
    }
    const auto& mark = st.graph->get<MarkNode>(st.graph->mark);
    if (mark.key_field) {
        out.push_back(data.at(source, *mark.key_field));
        return out;
    }
    out.push_back(Value(static_cast<double>(source)));
    return out;
}

} // namespace detail

// Whether row `row` of `table` (raw row `source`) belongs to a selection.
// Timer selections test their predicate; point selections test the store.
inline bool evaluate_selection(const RuntimeState& st, const std::string& name, const DataTable& table,
                               std::size_t row, std::size_t source, const Value* anim_override)
{
    const auto& sel = st.graph->get<SignalNode>(signal_id(name));
    if (sel.source == EventSource::Timer) {
        const Value& own = anim_override ? *anim_override : st.signal(name + "_anim_value");
        detail::EvalContext ctx{st, nullptr, nullptr, source, anim_override};
        const Row& r = table.rows()[row];
        for (const auto& c : sel.predicate) {
            auto idx = table.column_index(c.field);
            if (!idx) throw RuntimeError("unknown field \"" + c.field + "\" in selection \"" + name + "\"");
            Value rhs = detail::eval_in(ctx, c.rhs, &own);
            if (!detail::compare(r[*idx], c.op, rhs)) return false;
        }
        return true;
    }
    auto it = st.stores.find(name);
    if (it == st.stores.end() || it->second.empty()) return false;
    Row tuple = detail::project(st, sel, source);
    return std::find(it->second.begin(), it->second.end(), tuple) != it->second.end();
}

inline bool evaluate_selection(const RuntimeState& st, const std::string& name, std::size_t source)
{
    return evaluate_selection(st, name, *st.data, source, source);
}

// ---------------------------------------------------------------------------
// Tweening

// Joins two keyframes on `key` and interpolates `fields` by u. Rows only in
// `current` are exits, rows only in `next` are (hidden) enters.
inline RenderedTable tween_dataset(const RenderedTable& current, const RenderedTable& next, const std::string& key,
                                   double u, const std::vector<std::string>& fields)
{
    const DataTable& cur = current.table;
    auto ki = cur.column_index(key);
    if (!ki) throw RuntimeError("unknown key field \"" + key + "\"");
    auto index_of = [&](const DataTable& t, const char* which) {
        std::map<Value, std::size_t> idx;
        auto k = *t.column_index(key);
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!idx.emplace(t.rows()[i][k], i).second) {
                throw RuntimeError("duplicate key " + to_display(t.rows()[i][k]) + " in " + which + " keyframe");
            }
        }
        return idx;
    };
    auto cur_idx = index_of(cur, "current");
    auto next_idx = index_of(next.table, "next");

    std::vector<std::size_t> interp;
    for (const auto& f : fields) {
        if (auto i = cur.column_index(f)) interp.push_back(*i);
    }

    RenderedTable out{cur.empty_like(), {}};
    for (std::size_t i = 0; i < cur.size(); ++i) {
        Row row = cur.rows()[i];
        RowMeta meta = current.meta[i];
        auto hit = next_idx.find(row[*ki]);
        if (hit == next_idx.end()) {
            meta.role = RowRole::Exit;
        } else {
            meta.role = RowRole::Update;
            const Row& b = next.table.rows()[hit->second];
            for (auto c : interp) {
                if (!row[c].is_numeric() || !b[c].is_numeric()) continue;
                double a = row[c].as_number(), z = b[c].as_number();
                double v = u == 0 ? a : (1 - u) * a + u * z;
                row[c] = row[c].is_timestamp() ? Value(Timestamp{v}) : Value(v);
            }
        }
        out.table.add_row(std::move(row));
        out.meta.push_back(meta);
    }
    for (std::size_t i = 0; i < next.table.size(); ++i) {
        const Row& row = next.table.rows()[i];
        if (cur_idx.count(row[*ki])) continue;
        RowMeta meta = next.meta[i];
        meta.role = RowRole::Enter;
        meta.visible = false;
        out.table.add_row(row);
        out.meta.push_back(meta);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Propagation

namespace detail {

inline RenderedTable raw_table(const DataTable& data)
{
    RenderedTable t{data, {}};
    t.meta.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) t.meta[i].source = i;
    return t;
}

inline RenderedTable apply_op(const RuntimeState& st, const DatasetNode& node, const TransformOp& op,
                              RenderedTable in)
{
    const Value* anim = nullptr;
    if (node.next_keyframe) anim = &st.signal(st.graph->primary_selection + "_next_value");

    switch (op.kind) {
    case OpKind::Filter:
    case OpKind::SelectionFilter: {
        if (node.next_keyframe && anim->is_null()) return RenderedTable{in.table.empty_like(), {}};
        bool pass_all = false;
        if (op.kind == OpKind::SelectionFilter) {
            const auto& sel = st.graph->get<SignalNode>(signal_id(op.selection));
            auto store = st.stores.find(op.selection);
            pass_all = sel.source != EventSource::Timer && (store == st.stores.end() || store->second.empty());
        }
        if (pass_all) return in;
        RenderedTable out{in.table.empty_like(), {}};
        for (std::size_t i = 0; i < in.table.size(); ++i) {
            bool keep;
            if (op.kind == OpKind::SelectionFilter) {
                keep = evaluate_selection(st, op.selection, in.table, i, in.meta[i].source, anim);
            } else {
                EvalContext ctx{st, &in.table.rows()[i], &in.table, in.meta[i].source, anim};
                keep = truthy(eval_in(ctx, op.expr, anim));
            }
            if (keep) {
                out.table.add_row(in.table.rows()[i]);
                out.meta.push_back(in.meta[i]);
            }
        }
        return out;
    }
    case OpKind::TweenJoin: {
        double u = st.signal(op.fraction.substr(op.fraction.find(':') + 1)).as_number();
        const auto& next = st.datasets.at(op.next);
        bool has_next = !st.signal(st.graph->primary_selection + "_next_value").is_null();
        if (!has_next) {
            return tween_dataset(in, RenderedTable{in.table, in.meta}, op.key, 0, {});
        }
        return tween_dataset(in, next, op.key, u, op.fields);
    }
    case OpKind::EnterExit: {
        double u = st.signal(op.fraction.substr(op.fraction.find(':') + 1)).as_number();
        for (auto& m : in.meta) {
            if (m.role == RowRole::Enter && op.enter_opacity) {
                m.visible = u > 0;
                m.fade = *op.enter_opacity + (1 - *op.enter_opacity) * u;
            } else if (m.role == RowRole::Exit && op.exit_opacity) {
                m.fade = 1 + (*op.exit_opacity - 1) * u;
            }
        }
        return in;
    }
    }
    return in;
}

inline std::optional<std::pair<double, double>> extent(const RenderedTable& t, const std::string& field)
{
    auto idx = t.table.column_index(field);
    if (!idx) return std::nullopt;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < t.table.size(); ++i) {
        if (!t.meta[i].visible) continue;
        const Value& v = t.table.rows()[i][*idx];
        if (!v.is_numeric()) continue;
        lo = std::min(lo, v.as_number());
        hi = std::max(hi, v.as_number());
    }
    if (lo > hi) return std::nullopt;
    return std::make_pair(lo, hi);
}

inline std::vector<Value> padded_extent(double lo, double hi, bool zero)
{
    if (zero) {
        lo = std::min(lo, 0.0);
        hi = std::max(hi, 0.0);
    }
    if (lo == hi) {
        double pad = lo == 0 ? 1 : std::abs(lo) * 0.05;
        lo -= pad;
        hi += pad;
    }
    return {Value(lo), Value(hi)};
}

inline std::vector<Value> compute_domain(const RuntimeState& st, const std::string& id, const ScaleNode& s)
{
    const DomainSpec& d = s.domain;
    switch (d.kind) {
    case DomainKind::Static: return d.values;
    case DomainKind::Extent: {
        const auto& table = st.datasets.at(d.dataset);
        if (auto e = extent(table, d.field)) return padded_extent(e->first, e->second, d.zero);
        auto prev = st.domains.find(id);
        if (prev != st.domains.end()) return prev->second;
        return padded_extent(0, 0, d.zero);
    }
    case DomainKind::Distinct: {
        const auto& table = st.datasets.at(d.dataset).table;
        std::vector<Value> out = d.sort ? distinct_sorted(table, d.field) : distinct_in_order(table, d.field);
        if (d.sort == SortOrder::Descending) std::reverse(out.begin(), out.end());
        return out;
    }
    case DomainKind::Selection: {
        RenderedTable selected{st.data->empty_like(), {}};
        auto store = st.stores.find(d.selection);
        bool empty = store == st.stores.end() || store->second.empty();
        const auto& sel = st.graph->get<SignalNode>(signal_id(d.selection));
        for (std::size_t i = 0; i < st.data->size(); ++i) {
            bool in = sel.source == EventSource::Timer || !empty ? evaluate_selection(st, d.selection, i) : true;
            if (in) {
                selected.table.add_row(st.data->rows()[i]);
                selected.meta.push_back({i});
            }
        }
        if (auto e = extent(selected, d.field)) return padded_extent(e->first, e->second, d.zero);
        auto prev = st.domains.find(id);
        if (prev != st.domains.end()) return prev->second;
        return padded_extent(0, 0, d.zero);
    }
    }
    return {};
}

inline void update_signal(RuntimeState& st, const SignalNode& s)
{
    switch (s.kind) {
    case SignalKind::Param:
    case SignalKind::RawClock: return;
    case SignalKind::Selection:
        if (s.source == EventSource::Timer) st.signals[s.name] = st.signal(s.name + "_anim_value");
        else st.signals[s.name] = Value(static_cast<double>(st.stores[s.name].size()));
        return;
    case SignalKind::CycleClock:
        st.signals[s.name] = Value(cycle_clock(st.signal(s.selection + "_raw_clock").as_number(), s.cycle_ms));
        return;
    case SignalKind::EffectiveClock: {
        const TimeLayout& t = layout_of(st);
        double c = st.signal(s.selection + "_cycle").as_number();
        Easing e = find_easing(s.easing).value_or(Easing::Linear);
        st.signals[s.name] = Value(effective_clock(c, t.base_ms, pause_windows(st, s), e));
        return;
    }
    case SignalKind::AnimValue:
        st.signals[s.name] = invert_time(layout_of(st), st.signal(s.selection + "_clock").as_number());
        return;
    case SignalKind::NextValue: {
        const TimeLayout& t = layout_of(st);
        auto b = band_position(t, st.signal(s.selection + "_clock").as_number());
        st.signals[s.name] = b.has_next ? t.domain[b.index + 1] : Value();
        return;
    }
    case SignalKind::TweenFraction: {
        auto b = band_position(layout_of(st), st.signal(s.selection + "_clock").as_number());
        st.signals[s.name] = Value(b.fraction);
        return;
    }
    case SignalKind::Alias:
        st.signals[s.name] = st.signal(s.inputs.front().substr(s.inputs.front().find(':') + 1));
        return;
    }
}

inline void update_widgets(RuntimeState& st)
{
    for (auto& w : st.widgets) {
        if (w.desc.drives_clock) {
            w.value = st.signal(w.desc.target + "_anim_value");
        } else {
            auto it = st.signals.find(w.desc.target);
            if (it != st.signals.end()) w.value = it->second;
        }
    }
}

} // namespace detail

// One full topological pass over every node.
inline void propagate(RuntimeState& st)
{
    for (const auto& id : st.order) {
        const Node& node = st.graph->nodes.at(id);
        if (const auto* s = std::get_if<SignalNode>(&node)) {
            detail::update_signal(st, *s);
        } else if (const auto* d = std::get_if<DatasetNode>(&node)) {
            RenderedTable t;
            if (d->source == "raw") t = detail::raw_table(*st.data);
            else if (d->source == "inline") t = detail::raw_table(d->values.value_or(DataTable{}));
            else t = st.datasets.at(d->source);
            for (const auto& op : d->ops) t = detail::apply_op(st, *d, op, std::move(t));
            st.datasets[id] = std::move(t);
        } else if (const auto* sc = std::get_if<ScaleNode>(&node)) {
            st.domains[id] = detail::compute_domain(st, id, *sc);
        }
    }
    detail::update_widgets(st);
}

namespace detail {

inline void collect_exprs(const DataflowGraph& g, std::map<std::string, ExprPtr, std::less<>>& out)
{
    auto add = [&](const std::string& text) {
        if (!text.empty() && !out.count(text)) out.emplace(text, parse_expression(text));
    };
    for (const auto& [id, node] : g.nodes) {
        if (const auto* s = std::get_if<SignalNode>(&node)) {
            if (s->gate) add(*s->gate);
            for (const auto& c : s->predicate) add(c.rhs);
        } else if (const auto* d = std::get_if<DatasetNode>(&node)) {
            for (const auto& op : d->ops) add(op.expr);
        }
    }
}

} // namespace detail

inline RuntimeState init(std::shared_ptr<const DataflowGraph> graph, std::shared_ptr<const DataTable> data)
{
    RuntimeState st;
    st.graph = std::move(graph);
    st.data = std::move(data);
    auto order = topological_order(*st.graph);
    if (!order) throw RuntimeError("graph has a cycle");
    st.order = std::move(*order);
    auto exprs = std::make_shared<std::map<std::string, ExprPtr, std::less<>>>();
    detail::collect_exprs(*st.graph, *exprs);
    st.exprs = std::move(exprs);
    if (const auto* ts = st.graph->find<ScaleNode>(scale_id("time"))) st.time = time_layout(*ts);

    const auto& mark = st.graph->get<MarkNode>(st.graph->mark);
    for (const auto& [_, ch] : mark.channels) {
        for (const ChannelBinding* b : {&ch.base, ch.when ? &*ch.when : nullptr}) {
            if (b && b->field && !st.data->has_column(*b->field)) {
                throw RuntimeError("data has no field \"" + *b->field + "\"");
            }
        }
    }

    for (const auto& [id, node] : st.graph->nodes) {
        if (const auto* s = std::get_if<SignalNode>(&node)) {
            st.signals[s->name] = s->init;
            if (s->kind == SignalKind::Selection && s->source != EventSource::Timer) st.stores[s->name];
        }
    }
    for (const auto& w : st.graph->widgets) st.widgets.push_back({w, w.init});
    propagate(st);
    return st;
}

inline RuntimeState init(const DataflowGraph& graph, const DataTable& data)
{
    return init(std::make_shared<const DataflowGraph>(graph), std::make_shared<const DataTable>(data));
}

// Gate expression of a raw clock; an absent gate always passes.
inline bool clock_gate_open(const RuntimeState& st, const SignalNode& raw)
{
    if (!raw.gate) return true;
    detail::EvalContext ctx{st};
    return truthy(detail::eval_in(ctx, *raw.gate, nullptr));
}

// Timer event: every raw clock whose gate passes moves forward by dt.
inline void advance(RuntimeState& st, double dt)
{
    if (!(dt >= 0)) throw RuntimeError("advance needs dt >= 0");
    if (dt == 0) return;
    bool moved = false;
    std::vector<std::pair<std::string, double>> updates;
    for (const auto& [id, node] : st.graph->nodes) {
        const auto* s = std::get_if<SignalNode>(&node);
        if (!s || s->kind != SignalKind::RawClock) continue;
        if (!clock_gate_open(st, *s)) continue;
        updates.emplace_back(s->name, st.signal(s->name).as_number() + dt);
    }
    for (auto& [name, v] : updates) {
        st.signals[name] = Value(v);
        moved = true;
    }
    if (moved) propagate(st);
}

inline Value current_anim_value(const RuntimeState& st)
{
    auto it = st.signals.find(kAnimValue);
    return it == st.signals.end() ? Value() : it->second;
}

// Rendered x/y domains of the current frame.
inline std::map<std::string, std::vector<Value>> rescale_domains(const RuntimeState& st)
{
    std::map<std::string, std::vector<Value>> out;
    for (const char* channel : {"x", "y"}) {
        auto it = st.domains.find(scale_id(channel));
        if (it != st.domains.end()) out[channel] = it->second;
    }
    return out;
}

// Cycle clock at which a timer selection first shows `v`.
inline double clock_for_value(const RuntimeState& st, const std::string& selection, const Value& v)
{
    TimeLayout t = runtime_time_layout(st);
    const auto& eff = st.graph->get<SignalNode>(signal_id(selection + "_clock"));
    Easing e = find_easing(eff.easing).value_or(Easing::Linear);
    Value target = v;
    if (!t.continuous && !target.is_null()
        && std::find(t.domain.begin(), t.domain.end(), target) == t.domain.end() && target.is_number()) {
        // Sliders over non-numeric domains report an index.
        double idx = target.as_number();
        if (idx >= 0 && idx < static_cast<double>(t.domain.size()) && std::floor(idx) == idx) {
            target = t.domain[static_cast<std::size_t>(idx)];
        } else if (!t.domain.empty() && t.domain.front().is_numeric()) {
            // Snap to the band containing v.
            std::size_t best = 0;
            for (std::size_t i = 0; i < t.domain.size(); ++i) {
                if (t.domain[i].as_number() <= idx) best = i;
            }
            target = t.domain[best];
        }
    }
    if (t.continuous) {
        double lo = t.domain[0].as_number(), hi = t.domain[1].as_number();
        double x = std::clamp(target.as_number(), lo, hi);
        target = t.domain[0].is_timestamp() ? Value(Timestamp{x}) : Value(x);
    }
    double anchor = time_anchor(t, target);
    return cycle_position(anchor, t.base_ms, detail::pause_windows(st, eff), e);
}

} // namespace animflow
