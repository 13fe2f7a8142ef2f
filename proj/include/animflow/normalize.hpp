#pragma once

#include <optional>
#include <string>
#include <vector>

#include "animflow/validate.hpp"

namespace animflow {

inline constexpr double kDefaultStepMs = 500;

// A Spec with every default the compiler relies on filled in explicitly.
struct NormalizedSpec
{
    Spec spec;
    std::vector<Diagnostic> notes; // inference warnings; not part of equality

    friend bool operator==(const NormalizedSpec& a, const NormalizedSpec& b) { return a.spec == b.spec; }
};

namespace detail {

inline bool references_selection(const Spec& spec, const std::string& name)
{
    for (const auto& t : spec.transforms) {
        if (t.selection == name) return true;
    }
    auto branch_refs = [&](const ChannelBranch& b) {
        return b.field && b.field->scale && b.field->scale->domain_param == name;
    };
    for (const auto& [_, c] : spec.encoding) {
        if (c.condition && c.condition->param == name) return true;
        if (branch_refs(c.base) || (c.condition && branch_refs(c.condition->branch))) return true;
    }
    return false;
}

} // namespace detail

// Default time scale: band over the distinct field values with 500 ms per
// value. User-specified parts pass through untouched.
inline TimeScaleDef default_time_scale(const TimeEncodingDef& te, const DataTable& data)
{
    TimeScaleDef s = te.scale.value_or(TimeScaleDef{});
    if (!s.type) s.type = TimeScaleType::Band;
    std::vector<Value> distinct = distinct_sorted(data, te.field);
    if (s.domain) {
        for (auto& v : *s.domain) v = coerce_to_column(v, data, te.field);
    } else if (*s.type == TimeScaleType::Linear) {
        if (!distinct.empty()) s.domain = std::vector<Value>{distinct.front(), distinct.back()};
        else s.domain = std::vector<Value>{};
    } else if (te.sort) {
        std::vector<Value> order;
        for (const auto& v : *te.sort) order.push_back(coerce_to_column(v, data, te.field));
        s.domain = std::move(order);
    } else if (!distinct.empty() && distinct.front().is_string()) {
        s.domain = distinct_in_order(data, te.field);
    } else {
        s.domain = std::move(distinct);
    }
    if (!s.step && !s.duration) {
        if (*s.type == TimeScaleType::Band) {
            s.step = kDefaultStepMs;
        } else {
            s.duration = kDefaultStepMs * static_cast<double>(std::max<std::size_t>(1, distinct.size()));
        }
    }
    return s;
}

struct Elaboration
{
    std::optional<SelectionDef> selection;
    std::optional<TransformDef> filter;
};

// Expands a time encoding into selection form. Without a user timer selection
// this yields the default "current_frame" selection plus a filter transform;
// with one, a filter is generated only when nothing else references it.
inline Elaboration elaborate_time_encoding(const Spec& spec)
{
    Elaboration out;
    if (!spec.time) return out;
    auto animated = spec.animated_selections();
    if (animated.empty()) {
        SelectionDef s;
        s.name = std::string(kDefaultSelectionName);
        s.on.source = EventSource::Timer;
        s.predicate = std::vector<Comparison>{{spec.time->field, CompareOp::Eq, std::string(kAnimValue)}};
        s.pause = std::vector<PauseEntry>{};
        s.easing = "linear";
        out.filter = TransformDef{s.name, std::nullopt};
        out.selection = std::move(s);
        return out;
    }
    const SelectionDef& primary = *animated.front();
    if (!detail::references_selection(spec, primary.name)) {
        out.filter = TransformDef{primary.name, std::nullopt};
    }
    return out;
}

inline NormalizedSpec normalize(const Spec& spec, const DataTable& data)
{
    NormalizedSpec out{spec, {}};
    Spec& s = out.spec;
    if (!s.width) s.width = kDefaultWidth;
    if (!s.height) s.height = kDefaultHeight;

    auto fill_type = [&](ChannelBranch& b) {
        if (b.field && !b.field->type) b.field->type = detail::channel_type(*b.field, data);
    };
    for (auto& [_, c] : s.encoding) {
        fill_type(c.base);
        if (c.condition) fill_type(c.condition->branch);
    }

    if (!s.time) return out;

    auto& te = *s.time;
    if (!te.type) {
        auto idx = data.column_index(te.field);
        te.type = idx ? data.columns()[*idx].type : FieldType::Ordinal;
    }
    if (!te.key) {
        auto key = infer_key(s, data);
        if (!key) {
            out.notes.push_back({Severity::Warning, "/encoding/time/key",
                                 "no key field could be inferred; keyframes will not tween"});
        }
        te.key = key;
    }
    te.scale = default_time_scale(te, data);
    if (!te.rescale) te.rescale = false;

    for (auto& p : s.params) {
        auto* sel = std::get_if<SelectionDef>(&p);
        if (!sel || !sel->animated()) continue;
        if (!sel->predicate) {
            sel->predicate = std::vector<Comparison>{{te.field, CompareOp::Eq, std::string(kAnimValue)}};
        }
        if (!sel->pause) sel->pause = std::vector<PauseEntry>{};
        for (auto& pe : *sel->pause) pe.value = coerce_to_column(pe.value, data, te.field);
        if (!sel->easing) sel->easing = "linear";
    }

    Elaboration e = elaborate_time_encoding(s);
    if (e.selection) s.params.push_back(std::move(*e.selection));
    if (e.filter) s.transforms.push_back(std::move(*e.filter));
    return out;
}

} // namespace animflow
