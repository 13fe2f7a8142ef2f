#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "animflow/data.hpp"
#include "animflow/easing.hpp"
#include "animflow/expr.hpp"

namespace animflow {

using Json = nlohmann::ordered_json;

enum class Severity
{
    Error,
    Warning
};

struct Diagnostic
{
    Severity severity = Severity::Error;
    std::string path;
    std::string message;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline std::string to_string(const Diagnostic& d)
{
    std::string head = d.severity == Severity::Error ? "error" : "warning";
    if (!d.path.empty()) head += " " + d.path;
    return head + ": " + d.message;
}

inline bool has_errors(const std::vector<Diagnostic>& diags)
{
    for (const auto& d : diags) {
        if (d.severity == Severity::Error) return true;
    }
    return false;
}

enum class MarkType
{
    Circle,
    Line,
    Bar,
    Text,
    Tick
};

inline const char* to_string(MarkType m)
{
    switch (m) {
    case MarkType::Circle: return "circle";
    case MarkType::Line: return "line";
    case MarkType::Bar: return "bar";
    case MarkType::Text: return "text";
    case MarkType::Tick: return "tick";
    }
    return "?";
}

inline std::optional<MarkType> parse_mark_type(std::string_view s)
{
    if (s == "circle" || s == "point") return MarkType::Circle;
    if (s == "line") return MarkType::Line;
    if (s == "bar") return MarkType::Bar;
    if (s == "text") return MarkType::Text;
    if (s == "tick") return MarkType::Tick;
    return std::nullopt;
}

struct MarkDef
{
    MarkType type = MarkType::Circle;
    std::optional<std::string> fill;
    std::optional<std::string> stroke;
    std::optional<double> font_size;
    std::optional<double> opacity;
    std::optional<double> thickness; // bar thickness in px
    std::optional<std::string> orient; // "horizontal" | "vertical" for bars

    friend bool operator==(const MarkDef&, const MarkDef&) = default;
};

enum class SortOrder
{
    Ascending,
    Descending
};

struct ScaleDef
{
    std::optional<std::vector<Value>> domain;
    std::optional<std::string> domain_param; // selection-driven domain
    std::optional<std::vector<Value>> range;
    std::optional<bool> zero;
    std::optional<bool> reverse;

    friend bool operator==(const ScaleDef&, const ScaleDef&) = default;
};

struct FieldRef
{
    std::string field;
    std::optional<FieldType> type;
    std::optional<ScaleDef> scale;
    std::optional<std::variant<SortOrder, std::vector<Value>>> sort;

    friend bool operator==(const FieldRef&, const FieldRef&) = default;
};

// Exactly one of field/value is set.
struct ChannelBranch
{
    std::optional<FieldRef> field;
    std::optional<Value> value;

    friend bool operator==(const ChannelBranch&, const ChannelBranch&) = default;
};

struct Condition
{
    std::string param;
    ChannelBranch branch;

    friend bool operator==(const Condition&, const Condition&) = default;
};

struct ChannelDef
{
    ChannelBranch base;
    std::optional<Condition> condition;

    friend bool operator==(const ChannelDef&, const ChannelDef&) = default;
};

inline constexpr std::array<std::string_view, 8> kChannelNames{"x",     "y",     "color",   "size",
                                                               "opacity", "shape", "tooltip", "detail"};

inline bool is_channel_name(std::string_view name)
{
    for (auto c : kChannelNames) {
        if (c == name) return true;
    }
    return false;
}

enum class TimeScaleType
{
    Band,  // discrete keyframes, one band per domain value
    Linear // continuous domain
};

struct TimeScaleDef
{
    std::optional<TimeScaleType> type;
    std::optional<std::vector<Value>> domain;
    std::optional<double> step;
    std::optional<double> duration;

    friend bool operator==(const TimeScaleDef&, const TimeScaleDef&) = default;
};

struct TimeEncodingDef
{
    std::string field;
    std::optional<FieldType> type;
    // nullopt: infer; optional holding nullopt: explicitly no key.
    std::optional<std::optional<std::string>> key;
    std::optional<TimeScaleDef> scale;
    std::optional<bool> rescale;
    std::optional<std::vector<Value>> sort;

    friend bool operator==(const TimeEncodingDef&, const TimeEncodingDef&) = default;
};

enum class EventSource
{
    Timer,
    PointerMove,
    Click,
    Widget
};

inline const char* to_string(EventSource s)
{
    switch (s) {
    case EventSource::Timer: return "timer";
    case EventSource::PointerMove: return "pointermove";
    case EventSource::Click: return "click";
    case EventSource::Widget: return "widget";
    }
    return "?";
}

inline std::optional<EventSource> parse_event_source(std::string_view s)
{
    if (s == "timer") return EventSource::Timer;
    if (s == "pointermove" || s == "mousemove" || s == "mouseover" || s == "pointerover") {
        return EventSource::PointerMove;
    }
    if (s == "click") return EventSource::Click;
    if (s == "widget") return EventSource::Widget;
    return std::nullopt;
}

struct EventStreamDef
{
    EventSource source = EventSource::Timer;
    std::optional<std::string> filter;

    friend bool operator==(const EventStreamDef&, const EventStreamDef&) = default;
};

enum class CompareOp
{
    Eq,
    Lt,
    Lte,
    Gt,
    Gte
};

inline const char* to_string(CompareOp op)
{
    switch (op) {
    case CompareOp::Eq: return "eq";
    case CompareOp::Lt: return "lt";
    case CompareOp::Lte: return "lte";
    case CompareOp::Gt: return "gt";
    case CompareOp::Gte: return "gte";
    }
    return "?";
}

inline std::optional<CompareOp> parse_compare_op(std::string_view s)
{
    if (s == "eq" || s == "equal") return CompareOp::Eq;
    if (s == "lt") return CompareOp::Lt;
    if (s == "lte") return CompareOp::Lte;
    if (s == "gt") return CompareOp::Gt;
    if (s == "gte") return CompareOp::Gte;
    return std::nullopt;
}

// field <op> rhs, where rhs is expression text over anim_value and params.
struct Comparison
{
    std::string field;
    CompareOp op = CompareOp::Eq;
    std::string rhs;

    friend bool operator==(const Comparison&, const Comparison&) = default;
};

enum class WidgetKind
{
    RangeSlider,
    Checkbox
};

struct BindDef
{
    WidgetKind widget = WidgetKind::RangeSlider;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> step;

    friend bool operator==(const BindDef&, const BindDef&) = default;
};

struct PauseEntry
{
    Value value;
    double duration = 0;

    friend bool operator==(const PauseEntry&, const PauseEntry&) = default;
};

struct SelectionDef
{
    std::string name;
    EventStreamDef on;
    std::optional<std::vector<Comparison>> predicate;
    std::optional<BindDef> bind;
    std::optional<std::vector<PauseEntry>> pause;
    std::optional<std::string> easing;
    std::optional<std::vector<std::string>> fields;

    bool animated() const noexcept { return on.source == EventSource::Timer; }

    friend bool operator==(const SelectionDef&, const SelectionDef&) = default;
};

struct VariableParamDef
{
    std::string name;
    Value value;
    std::optional<BindDef> bind;

    friend bool operator==(const VariableParamDef&, const VariableParamDef&) = default;
};

using ParamDef = std::variant<SelectionDef, VariableParamDef>;

inline const std::string& param_name(const ParamDef& p)
{
    return std::visit([](const auto& d) -> const std::string& { return d.name; }, p);
}

// filter {selection} or filter {expr}; exactly one is set.
struct TransformDef
{
    std::optional<std::string> selection;
    std::optional<std::string> expr;

    friend bool operator==(const TransformDef&, const TransformDef&) = default;
};

struct FadeDef
{
    double opacity = 0;

    friend bool operator==(const FadeDef&, const FadeDef&) = default;
};

struct DataRef
{
    std::optional<DataTable> values;
    std::optional<std::string> url;

    friend bool operator==(const DataRef&, const DataRef&) = default;
};

struct Spec
{
    DataRef data;
    MarkDef mark;
    std::map<std::string, ChannelDef> encoding;
    std::optional<TimeEncodingDef> time;
    std::vector<ParamDef> params;
    std::vector<TransformDef> transforms;
    std::optional<FadeDef> enter;
    std::optional<FadeDef> exit;
    std::optional<double> width;
    std::optional<double> height;

    friend bool operator==(const Spec&, const Spec&) = default;

    const SelectionDef* find_selection(std::string_view name) const
    {
        for (const auto& p : params) {
            if (auto* s = std::get_if<SelectionDef>(&p); s && s->name == name) return s;
        }
        return nullptr;
    }

    const VariableParamDef* find_variable(std::string_view name) const
    {
        for (const auto& p : params) {
            if (auto* v = std::get_if<VariableParamDef>(&p); v && v->name == name) return v;
        }
        return nullptr;
    }

    std::vector<const SelectionDef*> animated_selections() const
    {
        std::vector<const SelectionDef*> out;
        for (const auto& p : params) {
            if (auto* s = std::get_if<SelectionDef>(&p); s && s->animated()) out.push_back(s);
        }
        return out;
    }
};

inline constexpr double kDefaultWidth = 400;
inline constexpr double kDefaultHeight = 300;

// ---------------------------------------------------------------------------
// JSON <-> Value

inline Value value_from_json(const Json& j, const std::string& path)
{
    switch (j.type()) {
    case Json::value_t::null: return Value();
    case Json::value_t::boolean: return Value(j.get<bool>());
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned:
    case Json::value_t::number_float: return Value(j.get<double>());
    case Json::value_t::string: return Value(j.get<std::string>());
    default: break;
    }
    throw SchemaError(path, "expected a scalar value");
}

inline Json value_to_json(const Value& v)
{
    switch (v.kind()) {
    case ValueKind::Null: return nullptr;
    case ValueKind::Number: {
        double d = v.as_number();
        if (std::floor(d) == d && std::fabs(d) < 9007199254740992.0) {
            return static_cast<std::int64_t>(d);
        }
        return d;
    }
    case ValueKind::String: return v.as_string();
    case ValueKind::Boolean: return v.as_bool();
    case ValueKind::Timestamp: return format_timestamp(v.as_timestamp());
    }
    return nullptr;
}

namespace detail {

// Walks a JSON object, reporting unknown keys as warnings.
class ObjectReader
{
public:
    ObjectReader(const Json& j, std::string path, std::vector<Diagnostic>& warnings,
                 std::initializer_list<std::string_view> known)
        : json_(j), path_(std::move(path))
    {
        if (!j.is_object()) {
            throw SchemaError(path_, "expected an object");
        }
        for (const auto& [key, _] : j.items()) {
            bool ok = false;
            for (auto k : known) ok = ok || k == key;
            if (!ok) {
                warnings.push_back({Severity::Warning, path_ + "/" + key, "unknown key \"" + key + "\" ignored"});
            }
        }
    }

    const Json* get(std::string_view key) const
    {
        auto it = json_.find(std::string(key));
        return it == json_.end() ? nullptr : &*it;
    }

    std::string child(std::string_view key) const { return path_ + "/" + std::string(key); }

    std::optional<std::string> string(std::string_view key) const
    {
        const Json* j = get(key);
        if (!j) return std::nullopt;
        if (!j->is_string()) throw SchemaError(child(key), "expected a string");
        return j->get<std::string>();
    }

    std::optional<double> number(std::string_view key) const
    {
        const Json* j = get(key);
        if (!j) return std::nullopt;
        if (!j->is_number()) throw SchemaError(child(key), "expected a number");
        return j->get<double>();
    }

    std::optional<bool> boolean(std::string_view key) const
    {
        const Json* j = get(key);
        if (!j) return std::nullopt;
        if (!j->is_boolean()) throw SchemaError(child(key), "expected a boolean");
        return j->get<bool>();
    }

    const std::string& path() const { return path_; }

private:
    const Json& json_;
    std::string path_;
};

inline std::vector<Value> values_from_json(const Json& j, const std::string& path)
{
    if (!j.is_array()) throw SchemaError(path, "expected an array");
    std::vector<Value> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(value_from_json(j[i], path + "/" + std::to_string(i)));
    }
    return out;
}

inline FieldType parse_type_field(const ObjectReader& r)
{
    auto s = r.string("type");
    auto t = parse_field_type(*s);
    if (!t) throw SchemaError(r.child("type"), "unknown field type \"" + *s + "\"");
    return *t;
}

inline std::string expr_text_from_json(const Json& j, const std::string& path)
{
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number()) return format_number(j.get<double>());
    if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
    if (j.is_null()) return "null";
    throw SchemaError(path, "expected an expression");
}

inline void check_expression(const std::string& text, const std::string& path)
{
    try {
        parse_expression(text);
    } catch (const SyntaxError& e) {
        throw SchemaError(path, std::string("invalid expression: ") + e.what());
    }
}

inline ScaleDef parse_scale(const Json& j, const std::string& path, std::vector<Diagnostic>& w)
{
    ObjectReader r(j, path, w, {"domain", "range", "zero", "reverse", "type", "nice"});
    ScaleDef s;
    if (const Json* d = r.get("domain")) {
        if (d->is_object()) {
            ObjectReader dr(*d, r.child("domain"), w, {"param"});
            s.domain_param = dr.string("param");
            if (!s.domain_param) throw SchemaError(dr.path(), "missing: param");
        } else {
            s.domain = values_from_json(*d, r.child("domain"));
        }
    }
    if (const Json* rg = r.get("range")) s.range = values_from_json(*rg, r.child("range"));
    s.zero = r.boolean("zero");
    s.reverse = r.boolean("reverse");
    return s;
}

inline FieldRef parse_field_ref(const ObjectReader& r, std::vector<Diagnostic>& w)
{
    FieldRef f;
    f.field = *r.string("field");
    if (r.get("type")) f.type = parse_type_field(r);
    if (const Json* s = r.get("scale")) f.scale = parse_scale(*s, r.child("scale"), w);
    if (const Json* s = r.get("sort")) {
        if (s->is_string()) {
            auto v = s->get<std::string>();
            if (v == "ascending") f.sort = SortOrder::Ascending;
            else if (v == "descending") f.sort = SortOrder::Descending;
            else throw SchemaError(r.child("sort"), "unknown sort order \"" + v + "\"");
        } else {
            f.sort = values_from_json(*s, r.child("sort"));
        }
    }
    return f;
}

inline ChannelBranch parse_branch(const ObjectReader& r, std::vector<Diagnostic>& w, bool allow_empty)
{
    ChannelBranch b;
    bool has_field = r.get("field") != nullptr;
    bool has_value = r.get("value") != nullptr;
    if (has_field && has_value) throw SchemaError(r.path(), "both field and value given");
    if (has_field) {
        b.field = parse_field_ref(r, w);
    } else if (has_value) {
        b.value = value_from_json(*r.get("value"), r.child("value"));
    } else if (!allow_empty) {
        throw SchemaError(r.path(), "missing: field or value");
    } else {
        b.value = Value();
    }
    return b;
}

inline ChannelDef parse_channel(const Json& j, const std::string& path, std::vector<Diagnostic>& w)
{
    ObjectReader r(j, path, w, {"field", "type", "scale", "sort", "value", "condition", "title", "legend", "axis"});
    ChannelDef c;
    if (const Json* cj = r.get("condition")) {
        ObjectReader cr(*cj, r.child("condition"), w, {"param", "field", "type", "scale", "sort", "value", "empty"});
        Condition cond;
        auto p = cr.string("param");
        if (!p) throw SchemaError(cr.path(), "missing: param");
        cond.param = *p;
        cond.branch = parse_branch(cr, w, false);
        c.condition = std::move(cond);
        c.base = parse_branch(r, w, true);
    } else {
        c.base = parse_branch(r, w, false);
    }
    return c;
}

inline TimeEncodingDef parse_time(const Json& j, const std::string& path, std::vector<Diagnostic>& w)
{
    ObjectReader r(j, path, w, {"field", "type", "key", "scale", "rescale", "sort"});
    TimeEncodingDef t;
    auto f = r.string("field");
    if (!f) throw SchemaError(path, "missing: field");
    t.field = *f;
    if (r.get("type")) t.type = parse_type_field(r);
    if (const Json* k = r.get("key")) {
        if (k->is_null() || (k->is_boolean() && !k->get<bool>())) {
            t.key = std::optional<std::string>{};
        } else if (k->is_string()) {
            t.key = std::optional<std::string>{k->get<std::string>()};
        } else {
            throw SchemaError(r.child("key"), "expected a field name or null");
        }
    }
    if (const Json* s = r.get("scale")) {
        ObjectReader sr(*s, r.child("scale"), w, {"type", "domain", "range"});
        TimeScaleDef ts;
        if (auto ty = sr.string("type")) {
            if (*ty == "band" || *ty == "point" || *ty == "ordinal") ts.type = TimeScaleType::Band;
            else if (*ty == "linear" || *ty == "time") ts.type = TimeScaleType::Linear;
            else throw SchemaError(sr.child("type"), "unknown time scale type \"" + *ty + "\"");
        }
        if (const Json* d = sr.get("domain")) ts.domain = values_from_json(*d, sr.child("domain"));
        if (const Json* rg = sr.get("range")) {
            ObjectReader rr(*rg, sr.child("range"), w, {"step", "duration"});
            ts.step = rr.number("step");
            ts.duration = rr.number("duration");
            if (ts.step && ts.duration) throw SchemaError(rr.path(), "both step and duration given");
        }
        t.scale = std::move(ts);
    }
    t.rescale = r.boolean("rescale");
    if (const Json* s = r.get("sort")) t.sort = values_from_json(*s, r.child("sort"));
    return t;
}

inline BindDef parse_bind(const Json& j, const std::string& path, std::vector<Diagnostic>& w)
{
    BindDef b;
    std::string input;
    if (j.is_string()) {
        input = j.get<std::string>();
    } else {
        ObjectReader r(j, path, w, {"input", "min", "max", "step", "name"});
        auto in = r.string("input");
        if (!in) throw SchemaError(path, "missing: input");
        input = *in;
        b.min = r.number("min");
        b.max = r.number("max");
        b.step = r.number("step");
    }
    if (input == "range") b.widget = WidgetKind::RangeSlider;
    else if (input == "checkbox") b.widget = WidgetKind::Checkbox;
    else throw SchemaError(path, "unsupported input \"" + input + "\"");
    return b;
}

inline void parse_comparisons(const Json& j, const std::string& path, std::vector<Diagnostic>& w,
                              std::vector<Comparison>& out)
{
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            parse_comparisons(j[i], path + "/" + std::to_string(i), w, out);
        }
        return;
    }
    if (j.is_object() && j.contains("and")) {
        ObjectReader r(j, path, w, {"and"});
        parse_comparisons(*r.get("and"), r.child("and"), w, out);
        return;
    }
    ObjectReader r(j, path, w, {"field", "eq", "equal", "lt", "lte", "gt", "gte"});
    auto field = r.string("field");
    if (!field) throw SchemaError(path, "missing: field");
    bool any = false;
    for (auto key : {"eq", "equal", "lt", "lte", "gt", "gte"}) {
        if (const Json* rhs = r.get(key)) {
            Comparison c{*field, *parse_compare_op(key), expr_text_from_json(*rhs, r.child(key))};
            check_expression(c.rhs, r.child(key));
            out.push_back(std::move(c));
            any = true;
        }
    }
    if (!any) throw SchemaError(path, "missing comparison operator (eq, lt, lte, gt, gte)");
}

inline ParamDef parse_param(const Json& j, const std::string& path, std::vector<Diagnostic>& w)
{
    ObjectReader r(j, path, w, {"name", "value", "bind", "select"});
    auto name = r.string("name");
    if (!name) throw SchemaError(path, "missing: name");
    std::optional<BindDef> bind;
    if (const Json* b = r.get("bind")) bind = parse_bind(*b, r.child("bind"), w);
    const Json* sel = r.get("select");
    if (!sel) {
        VariableParamDef v{*name, Value(), bind};
        if (const Json* val = r.get("value")) v.value = value_from_json(*val, r.child("value"));
        return v;
    }
    SelectionDef s;
    s.name = *name;
    s.bind = bind;
    if (sel->is_string()) {
        if (sel->get<std::string>() != "point") {
            throw SchemaError(r.child("select"), "unsupported selection type \"" + sel->get<std::string>() + "\"");
        }
        s.on.source = EventSource::Click;
        return s;
    }
    ObjectReader sr(*sel, r.child("select"), w, {"type", "on", "predicate", "pause", "easing", "fields", "clear", "toggle"});
    auto type = sr.string("type");
    if (!type) throw SchemaError(sr.path(), "missing: type");
    if (*type != "point") throw SchemaError(sr.child("type"), "unsupported selection type \"" + *type + "\"");
    s.on.source = EventSource::Click;
    if (const Json* on = sr.get("on")) {
        std::string src;
        if (on->is_string()) {
            src = on->get<std::string>();
        } else {
            ObjectReader onr(*on, sr.child("on"), w, {"type", "filter"});
            auto t = onr.string("type");
            if (!t) throw SchemaError(onr.path(), "missing: type");
            src = *t;
            if (auto f = onr.string("filter")) {
                check_expression(*f, onr.child("filter"));
                s.on.filter = *f;
            }
        }
        auto es = parse_event_source(src);
        if (!es) throw SchemaError(sr.child("on"), "unknown event source \"" + src + "\"");
        s.on.source = *es;
    }
    if (const Json* p = sr.get("predicate")) {
        std::vector<Comparison> comps;
        parse_comparisons(*p, sr.child("predicate"), w, comps);
        s.predicate = std::move(comps);
    }
    if (const Json* p = sr.get("pause")) {
        if (!p->is_array()) throw SchemaError(sr.child("pause"), "expected an array");
        std::vector<PauseEntry> pauses;
        for (std::size_t i = 0; i < p->size(); ++i) {
            std::string ppath = sr.child("pause") + "/" + std::to_string(i);
            ObjectReader pr((*p)[i], ppath, w, {"value", "duration"});
            const Json* v = pr.get("value");
            auto d = pr.number("duration");
            if (!v || !d) throw SchemaError(ppath, "missing: value or duration");
            pauses.push_back({value_from_json(*v, pr.child("value")), *d});
        }
        s.pause = std::move(pauses);
    }
    if (auto e = sr.string("easing")) {
        auto kind = find_easing(*e);
        s.easing = kind ? std::string(easing_name(*kind)) : *e;
    }
    if (const Json* f = sr.get("fields")) {
        if (!f->is_array()) throw SchemaError(sr.child("fields"), "expected an array");
        std::vector<std::string> fields;
        for (const auto& x : *f) {
            if (!x.is_string()) throw SchemaError(sr.child("fields"), "expected field names");
            fields.push_back(x.get<std::string>());
        }
        s.fields = std::move(fields);
    }
    return s;
}

inline DataTable table_from_json_records(const Json& j, const std::string& path)
{
    if (!j.is_array()) throw SchemaError(path, "expected an array of records");
    std::vector<std::vector<std::pair<std::string, Value>>> records;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& rec = j[i];
        std::string rpath = path + "/" + std::to_string(i);
        if (!rec.is_object()) throw SchemaError(rpath, "expected an object");
        std::vector<std::pair<std::string, Value>> row;
        for (const auto& [k, v] : rec.items()) {
            row.emplace_back(k, value_from_json(v, rpath + "/" + k));
        }
        records.push_back(std::move(row));
    }
    return table_from_records(records);
}

} // namespace detail

// Parses a chart document from JSON. Unknown keys are reported as
// warnings; structural problems raise SchemaError, malformed text SyntaxError.
inline Spec parse_spec(const Json& doc, std::vector<Diagnostic>* warnings = nullptr)
{
    std::vector<Diagnostic> local;
    auto& w = warnings ? *warnings : local;
    if (!doc.is_object()) throw SchemaError("", "expected a chart object");
    std::vector<std::string> missing;
    if (!doc.contains("data")) missing.push_back("data");
    if (!doc.contains("mark")) missing.push_back("mark");
    if (!missing.empty()) {
        std::string msg = "missing: ";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
        throw SchemaError("", msg);
    }
    detail::ObjectReader r(doc, "", w,
                           {"$schema", "data", "mark", "encoding", "params", "transform", "enter", "exit",
                            "width", "height", "title", "description"});
    Spec spec;

    {
        const Json& d = *r.get("data");
        detail::ObjectReader dr(d, "/data", w, {"values", "url", "format", "name"});
        if (const Json* v = dr.get("values")) spec.data.values = detail::table_from_json_records(*v, "/data/values");
        spec.data.url = dr.string("url");
        if (!spec.data.values && !spec.data.url) throw SchemaError("/data", "missing: values or url");
    }

    {
        const Json& m = *r.get("mark");
        std::string type;
        if (m.is_string()) {
            type = m.get<std::string>();
        } else {
            detail::ObjectReader mr(m, "/mark", w, {"type", "fill", "stroke", "fontSize", "opacity", "thickness", "orient"});
            auto t = mr.string("type");
            if (!t) throw SchemaError("/mark", "missing: type");
            type = *t;
            spec.mark.fill = mr.string("fill");
            spec.mark.stroke = mr.string("stroke");
            spec.mark.font_size = mr.number("fontSize");
            spec.mark.opacity = mr.number("opacity");
            spec.mark.thickness = mr.number("thickness");
            spec.mark.orient = mr.string("orient");
        }
        auto mt = parse_mark_type(type);
        if (!mt) throw SchemaError("/mark", "unknown mark type \"" + type + "\"");
        spec.mark.type = *mt;
    }

    if (const Json* e = r.get("encoding")) {
        if (!e->is_object()) throw SchemaError("/encoding", "expected an object");
        for (const auto& [name, def] : e->items()) {
            std::string path = "/encoding/" + name;
            if (name == "time") {
                spec.time = detail::parse_time(def, path, w);
            } else {
                spec.encoding.emplace(name, detail::parse_channel(def, path, w));
            }
        }
    }

    if (const Json* p = r.get("params")) {
        if (!p->is_array()) throw SchemaError("/params", "expected an array");
        for (std::size_t i = 0; i < p->size(); ++i) {
            spec.params.push_back(detail::parse_param((*p)[i], "/params/" + std::to_string(i), w));
        }
    }

    if (const Json* t = r.get("transform")) {
        if (!t->is_array()) throw SchemaError("/transform", "expected an array");
        for (std::size_t i = 0; i < t->size(); ++i) {
            std::string path = "/transform/" + std::to_string(i);
            detail::ObjectReader tr((*t)[i], path, w, {"filter"});
            const Json* f = tr.get("filter");
            if (!f) throw SchemaError(path, "unsupported transform (only filter is available)");
            TransformDef td;
            if (f->is_string()) {
                detail::check_expression(f->get<std::string>(), tr.child("filter"));
                td.expr = f->get<std::string>();
            } else {
                detail::ObjectReader fr(*f, tr.child("filter"), w, {"param", "empty"});
                td.selection = fr.string("param");
                if (!td.selection) throw SchemaError(fr.path(), "missing: param");
            }
            spec.transforms.push_back(std::move(td));
        }
    }

    auto fade = [&](const char* key) -> std::optional<FadeDef> {
        const Json* f = r.get(key);
        if (!f) return std::nullopt;
        detail::ObjectReader fr(*f, r.child(key), w, {"opacity"});
        auto o = fr.number("opacity");
        if (!o) throw SchemaError(fr.path(), "missing: opacity");
        return FadeDef{*o};
    };
    spec.enter = fade("enter");
    spec.exit = fade("exit");
    spec.width = r.number("width");
    spec.height = r.number("height");
    return spec;
}

inline Spec parse_spec(std::string_view text, std::vector<Diagnostic>* warnings = nullptr)
{
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("malformed document: ") + e.what(), e.byte);
    }
    return parse_spec(doc, warnings);
}

// ---------------------------------------------------------------------------
// Serialization

inline Json table_to_json(const DataTable& t)
{
    Json rows = Json::array();
    for (const auto& row : t.rows()) {
        Json rec = Json::object();
        for (std::size_t c = 0; c < row.size(); ++c) {
            rec[t.columns()[c].name] = value_to_json(row[c]);
        }
        rows.push_back(std::move(rec));
    }
    return rows;
}

namespace detail {

inline Json values_to_json(const std::vector<Value>& vs)
{
    Json a = Json::array();
    for (const auto& v : vs) a.push_back(value_to_json(v));
    return a;
}

inline Json bind_to_json(const BindDef& b)
{
    Json j = {{"input", b.widget == WidgetKind::RangeSlider ? "range" : "checkbox"}};
    if (b.min) j["min"] = *b.min;
    if (b.max) j["max"] = *b.max;
    if (b.step) j["step"] = *b.step;
    return j;
}

inline void field_to_json(const FieldRef& f, Json& j)
{
    j["field"] = f.field;
    if (f.type) j["type"] = to_string(*f.type);
    if (f.scale) {
        Json s = Json::object();
        if (f.scale->domain) s["domain"] = values_to_json(*f.scale->domain);
        if (f.scale->domain_param) s["domain"] = {{"param", *f.scale->domain_param}};
        if (f.scale->range) s["range"] = values_to_json(*f.scale->range);
        if (f.scale->zero) s["zero"] = *f.scale->zero;
        if (f.scale->reverse) s["reverse"] = *f.scale->reverse;
        j["scale"] = std::move(s);
    }
    if (f.sort) {
        if (auto* o = std::get_if<SortOrder>(&*f.sort)) {
            j["sort"] = *o == SortOrder::Ascending ? "ascending" : "descending";
        } else {
            j["sort"] = values_to_json(std::get<std::vector<Value>>(*f.sort));
        }
    }
}

inline void branch_to_json(const ChannelBranch& b, Json& j)
{
    if (b.field) field_to_json(*b.field, j);
    else if (b.value) j["value"] = value_to_json(*b.value);
}

} // namespace detail

inline Json to_json(const Spec& spec)
{
    Json j = Json::object();
    if (spec.data.values) {
        j["data"] = {{"values", table_to_json(*spec.data.values)}};
    } else {
        j["data"] = {{"url", spec.data.url.value_or("")}};
    }
    {
        const auto& m = spec.mark;
        if (!m.fill && !m.stroke && !m.font_size && !m.opacity && !m.thickness && !m.orient) {
            j["mark"] = to_string(m.type);
        } else {
            Json mj = {{"type", to_string(m.type)}};
            if (m.fill) mj["fill"] = *m.fill;
            if (m.stroke) mj["stroke"] = *m.stroke;
            if (m.font_size) mj["fontSize"] = *m.font_size;
            if (m.opacity) mj["opacity"] = *m.opacity;
            if (m.thickness) mj["thickness"] = *m.thickness;
            if (m.orient) mj["orient"] = *m.orient;
            j["mark"] = std::move(mj);
        }
    }
    Json enc = Json::object();
    for (const auto& [name, c] : spec.encoding) {
        Json cj = Json::object();
        if (c.condition) {
            Json cond = {{"param", c.condition->param}};
            detail::branch_to_json(c.condition->branch, cond);
            cj["condition"] = std::move(cond);
        }
        detail::branch_to_json(c.base, cj);
        enc[name] = std::move(cj);
    }
    if (spec.time) {
        const auto& t = *spec.time;
        Json tj = {{"field", t.field}};
        if (t.type) tj["type"] = to_string(*t.type);
        if (t.key) tj["key"] = t.key->has_value() ? Json(**t.key) : Json(nullptr);
        if (t.scale) {
            Json s = Json::object();
            if (t.scale->type) s["type"] = *t.scale->type == TimeScaleType::Band ? "band" : "linear";
            if (t.scale->domain) s["domain"] = detail::values_to_json(*t.scale->domain);
            if (t.scale->step) s["range"] = {{"step", *t.scale->step}};
            if (t.scale->duration) s["range"] = {{"duration", *t.scale->duration}};
            tj["scale"] = std::move(s);
        }
        if (t.rescale) tj["rescale"] = *t.rescale;
        if (t.sort) tj["sort"] = detail::values_to_json(*t.sort);
        enc["time"] = std::move(tj);
    }
    if (!enc.empty()) j["encoding"] = std::move(enc);

    if (!spec.params.empty()) {
        Json ps = Json::array();
        for (const auto& p : spec.params) {
            if (const auto* v = std::get_if<VariableParamDef>(&p)) {
                Json pj = {{"name", v->name}, {"value", value_to_json(v->value)}};
                if (v->bind) pj["bind"] = detail::bind_to_json(*v->bind);
                ps.push_back(std::move(pj));
                continue;
            }
            const auto& s = std::get<SelectionDef>(p);
            Json sel = {{"type", "point"}};
            Json on = {{"type", to_string(s.on.source)}};
            if (s.on.filter) on["filter"] = *s.on.filter;
            sel["on"] = std::move(on);
            if (s.predicate) {
                Json preds = Json::array();
                for (const auto& c : *s.predicate) {
                    preds.push_back({{"field", c.field}, {to_string(c.op), c.rhs}});
                }
                sel["predicate"] = std::move(preds);
            }
            if (s.pause) {
                Json pauses = Json::array();
                for (const auto& pe : *s.pause) {
                    pauses.push_back({{"value", value_to_json(pe.value)}, {"duration", pe.duration}});
                }
                sel["pause"] = std::move(pauses);
            }
            if (s.easing) sel["easing"] = *s.easing;
            if (s.fields) sel["fields"] = *s.fields;
            Json pj = {{"name", s.name}, {"select", std::move(sel)}};
            if (s.bind) pj["bind"] = detail::bind_to_json(*s.bind);
            ps.push_back(std::move(pj));
        }
        j["params"] = std::move(ps);
    }
    if (!spec.transforms.empty()) {
        Json ts = Json::array();
        for (const auto& t : spec.transforms) {
            if (t.selection) ts.push_back({{"filter", {{"param", *t.selection}}}});
            else ts.push_back({{"filter", t.expr.value_or("true")}});
        }
        j["transform"] = std::move(ts);
    }
    if (spec.enter) j["enter"] = {{"opacity", spec.enter->opacity}};
    if (spec.exit) j["exit"] = {{"opacity", spec.exit->opacity}};
    if (spec.width) j["width"] = *spec.width;
    if (spec.height) j["height"] = *spec.height;
    return j;
}

inline std::string serialize(const Spec& spec, int indent = 2)
{
    return to_json(spec).dump(indent);
}

} // namespace animflow
