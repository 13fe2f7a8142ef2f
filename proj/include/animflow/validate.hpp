#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "animflow/spec.hpp"

namespace animflow {

inline constexpr std::string_view kAnimValue = "anim_value";
inline constexpr std::string_view kIsPlaying = "is_playing";
inline constexpr std::string_view kDefaultSelectionName = "current_frame";

// Distinct non-null values of a column in ascending order.
inline std::vector<Value> distinct_sorted(const DataTable& data, std::string_view field)
{
    std::vector<Value> out;
    auto idx = data.column_index(field);
    if (!idx) return out;
    std::set<Value> seen;
    for (const auto& row : data.rows()) {
        const Value& v = row[*idx];
        if (!v.is_null() && seen.insert(v).second) out.push_back(v);
    }
    std::stable_sort(out.begin(), out.end(), [](const Value& a, const Value& b) {
        if (a.kind() != b.kind() && !(a.is_numeric() && b.is_numeric())) return a < b;
        return compare_values(a, b) < 0;
    });
    return out;
}

// Distinct non-null values in order of first appearance.
inline std::vector<Value> distinct_in_order(const DataTable& data, std::string_view field)
{
    std::vector<Value> out;
    auto idx = data.column_index(field);
    if (!idx) return out;
    std::set<Value> seen;
    for (const auto& row : data.rows()) {
        const Value& v = row[*idx];
        if (!v.is_null() && seen.insert(v).second) out.push_back(v);
    }
    return out;
}

// Coerces a spec literal to the kind stored in a column (ISO text to timestamp).
inline Value coerce_to_column(const Value& v, const DataTable& data, std::string_view field)
{
    auto idx = data.column_index(field);
    if (!idx || !v.is_string()) return v;
    if (data.columns()[*idx].type == FieldType::Temporal) {
        if (auto ts = parse_timestamp(v.as_string())) return Value(*ts);
    }
    return v;
}

namespace detail {

inline std::optional<std::string> field_of(const Spec& spec, const char* channel)
{
    auto it = spec.encoding.find(channel);
    if (it == spec.encoding.end() || !it->second.base.field) return std::nullopt;
    return it->second.base.field->field;
}

inline FieldType channel_type(const FieldRef& f, const DataTable& data)
{
    if (f.type) return *f.type;
    if (auto idx = data.column_index(f.field)) return data.columns()[*idx].type;
    return FieldType::Nominal;
}

} // namespace detail

// Key field inference: the detail channel's field, else the color channel's
// field when it is categorical, else none (keyframes snap without tweening).
inline std::optional<std::string> infer_key(const Spec& spec, const DataTable& data)
{
    if (auto detail_field = detail::field_of(spec, "detail")) {
        return detail_field;
    }
    auto it = spec.encoding.find("color");
    if (it != spec.encoding.end() && it->second.base.field) {
        FieldType t = detail::channel_type(*it->second.base.field, data);
        if (is_discrete(t)) return it->second.base.field->field;
    }
    return std::nullopt;
}

namespace detail {

class Validator
{
public:
    Validator(const Spec& spec, const DataTable& data) : spec_(spec), data_(data) {}

    std::vector<Diagnostic> run()
    {
        collect_params();
        check_mark();
        check_encoding();
        check_time();
        check_params();
        check_transforms();
        if (spec_.width && *spec_.width <= 0) error("/width", "width must be positive");
        if (spec_.height && *spec_.height <= 0) error("/height", "height must be positive");
        return std::move(diags_);
    }

private:
    void error(std::string path, std::string msg) { diags_.push_back({Severity::Error, std::move(path), std::move(msg)}); }
    void warning(std::string path, std::string msg) { diags_.push_back({Severity::Warning, std::move(path), std::move(msg)}); }

    void collect_params()
    {
        for (std::size_t i = 0; i < spec_.params.size(); ++i) {
            const auto& name = param_name(spec_.params[i]);
            if (!names_.insert(name).second) {
                error("/params/" + std::to_string(i) + "/name", "duplicate param name \"" + name + "\"");
            }
            if (name == kAnimValue) {
                error("/params/" + std::to_string(i) + "/name", "\"anim_value\" is reserved");
            }
        }
    }

    bool declared(const std::string& name) const { return names_.count(name) > 0; }

    void check_field(const std::string& path, const std::string& field)
    {
        if (!data_.has_column(field)) error(path, "unknown field \"" + field + "\"");
    }

    void check_selection_ref(const std::string& path, const std::string& name)
    {
        if (!spec_.find_selection(name)) {
            if (spec_.find_variable(name)) error(path, "\"" + name + "\" is a variable, not a selection");
            else error(path, "undeclared selection \"" + name + "\"");
        }
    }

    void check_identifiers(const std::string& path, const std::string& text, bool allow_fields)
    {
        ExprPtr e;
        try {
            e = parse_expression(text);
        } catch (const SyntaxError& err) {
            error(path, std::string("invalid expression: ") + err.what());
            return;
        }
        for (const auto& id : free_identifiers(*e)) {
            if (id == kAnimValue || id == kIsPlaying || declared(id)) continue;
            if (allow_fields && data_.has_column(id)) continue;
            error(path, "unbound identifier \"" + id + "\"");
        }
    }

    void check_mark()
    {
        const auto& m = spec_.mark;
        if (m.orient && *m.orient != "horizontal" && *m.orient != "vertical") {
            error("/mark/orient", "orient must be \"horizontal\" or \"vertical\"");
        }
        if (m.opacity && (*m.opacity < 0 || *m.opacity > 1)) error("/mark/opacity", "opacity outside [0, 1]");
        if (m.thickness && *m.thickness < 0) error("/mark/thickness", "thickness must be non-negative");
    }

    void check_branch(const std::string& path, const ChannelBranch& b)
    {
        if (!b.field) return;
        check_field(path + "/field", b.field->field);
        if (b.field->scale && b.field->scale->domain_param) {
            check_selection_ref(path + "/scale/domain/param", *b.field->scale->domain_param);
        }
    }

    void check_encoding()
    {
        for (const auto& [name, c] : spec_.encoding) {
            std::string path = "/encoding/" + name;
            if (!is_channel_name(name)) {
                error(path, "unknown channel \"" + name + "\"");
                continue;
            }
            check_branch(path, c.base);
            if (c.condition) {
                check_selection_ref(path + "/condition/param", c.condition->param);
                check_branch(path + "/condition", c.condition->branch);
            }
        }
    }

    void check_time()
    {
        if (!spec_.time) return;
        const auto& t = *spec_.time;
        if (!data_.has_column(t.field)) {
            error("/encoding/time/field", "unknown field \"" + t.field + "\"");
            return;
        }
        FieldType type = t.type.value_or(data_.column(t.field).type);
        if (type == FieldType::Nominal && !t.sort) {
            error("/encoding/time/type", "time field \"" + t.field + "\" has no sort order (nominal)");
        }
        bool continuous = t.scale && t.scale->type == TimeScaleType::Linear;
        if (t.scale) {
            const auto& s = *t.scale;
            if (s.step && *s.step <= 0) error("/encoding/time/scale/range/step", "step must be positive");
            if (s.duration && *s.duration <= 0) error("/encoding/time/scale/range/duration", "duration must be positive");
            if (continuous && s.domain) {
                if (s.domain->size() != 2) {
                    error("/encoding/time/scale/domain", "continuous domain needs exactly [lo, hi]");
                } else {
                    Value lo = coerce_to_column((*s.domain)[0], data_, t.field);
                    Value hi = coerce_to_column((*s.domain)[1], data_, t.field);
                    if (!lo.is_numeric() || !hi.is_numeric() || lo.as_number() >= hi.as_number()) {
                        error("/encoding/time/scale/domain", "continuous domain requires numeric lo < hi");
                    }
                }
            }
            if (s.domain && s.domain->empty()) error("/encoding/time/scale/domain", "domain is empty");
        }
        if (t.key && t.key->has_value()) {
            const std::string& key = **t.key;
            if (!data_.has_column(key)) {
                error("/encoding/time/key", "unknown field \"" + key + "\"");
            } else if (!continuous) {
                check_key_unique(key, t.field);
            }
        } else if (!t.key && !continuous) {
            auto key = infer_key(spec_, data_);
            if (key && data_.has_column(*key)) check_key_unique(*key, t.field);
        }
    }

    void check_key_unique(const std::string& key, const std::string& field)
    {
        auto ki = *data_.column_index(key);
        auto fi = *data_.column_index(field);
        std::map<Value, std::set<Value>> seen;
        std::set<Value> reported;
        for (const auto& row : data_.rows()) {
            if (!seen[row[fi]].insert(row[ki]).second && reported.insert(row[fi]).second) {
                error("/encoding/time/key", "key not unique within keyframe: \"" + to_display(row[ki])
                                                + "\" repeats in keyframe " + to_display(row[fi]));
            }
        }
    }

    std::vector<Value> time_domain() const
    {
        const auto& t = *spec_.time;
        if (t.scale && t.scale->domain) {
            std::vector<Value> out;
            for (const auto& v : *t.scale->domain) out.push_back(coerce_to_column(v, data_, t.field));
            return out;
        }
        return distinct_sorted(data_, t.field);
    }

    void check_params()
    {
        bool has_timer = false;
        for (std::size_t i = 0; i < spec_.params.size(); ++i) {
            std::string path = "/params/" + std::to_string(i);
            const auto* s = std::get_if<SelectionDef>(&spec_.params[i]);
            if (!s) continue;
            if (s->on.filter) check_identifiers(path + "/select/on/filter", *s->on.filter, false);
            if (s->predicate) {
                for (std::size_t k = 0; k < s->predicate->size(); ++k) {
                    const auto& c = (*s->predicate)[k];
                    std::string cpath = path + "/select/predicate/" + std::to_string(k);
                    check_field(cpath + "/field", c.field);
                    check_identifiers(cpath + "/" + to_string(c.op), c.rhs, false);
                }
            }
            if (s->fields) {
                for (const auto& f : *s->fields) check_field(path + "/select/fields", f);
            }
            if (s->easing && !find_easing(*s->easing)) {
                error(path + "/select/easing", "unknown easing \"" + *s->easing + "\"");
            }
            if (s->animated()) {
                has_timer = true;
                if (!spec_.time) {
                    error(path + "/select/on", "timer selection \"" + s->name + "\" requires a time encoding");
                }
            } else if (s->pause || s->easing) {
                warning(path + "/select", "pause and easing only apply to timer selections");
            }
            if (s->pause && spec_.time && data_.has_column(spec_.time->field)) {
                auto domain = time_domain();
                bool continuous = spec_.time->scale && spec_.time->scale->type == TimeScaleType::Linear;
                for (std::size_t k = 0; k < s->pause->size(); ++k) {
                    const auto& pe = (*s->pause)[k];
                    std::string ppath = path + "/select/pause/" + std::to_string(k);
                    if (pe.duration < 0) error(ppath + "/duration", "pause duration must be non-negative");
                    Value v = coerce_to_column(pe.value, data_, spec_.time->field);
                    bool ok = false;
                    if (continuous && domain.size() == 2 && v.is_numeric() && domain[0].is_numeric()
                        && domain[1].is_numeric()) {
                        ok = v.as_number() >= domain[0].as_number() && v.as_number() <= domain[1].as_number();
                    } else {
                        ok = std::find(domain.begin(), domain.end(), v) != domain.end();
                    }
                    if (!ok) error(ppath + "/value", "pause value " + to_display(v) + " is not in the time domain");
                }
            }
        }
        if (spec_.time && !has_timer) {
            // The normalizer will generate the default selection under this name.
            if (declared(std::string(kDefaultSelectionName))) {
                error("/params", "param name \"current_frame\" collides with the generated animation selection");
            }
        }
        for (std::size_t i = 0; i < spec_.params.size(); ++i) {
            const auto* v = std::get_if<VariableParamDef>(&spec_.params[i]);
            if (v && v->bind && v->bind->widget == WidgetKind::Checkbox && !v->value.is_bool()
                && !v->value.is_null()) {
                error("/params/" + std::to_string(i) + "/value", "checkbox-bound param needs a boolean value");
            }
        }
    }

    void check_transforms()
    {
        for (std::size_t i = 0; i < spec_.transforms.size(); ++i) {
            std::string path = "/transform/" + std::to_string(i) + "/filter";
            const auto& t = spec_.transforms[i];
            if (t.selection) check_selection_ref(path + "/param", *t.selection);
            if (t.expr) check_identifiers(path, *t.expr, true);
        }
    }

    const Spec& spec_;
    const DataTable& data_;
    std::set<std::string> names_;
    std::vector<Diagnostic> diags_;
};

} // namespace detail

// Checks a parsed spec against its bound data. Empty result iff valid.
inline std::vector<Diagnostic> validate_spec(const Spec& spec, const DataTable& data)
{
    return detail::Validator(spec, data).run();
}

} // namespace animflow
