#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "animflow/normalize.hpp"

using namespace animflow;

namespace {

DataTable gapminder_table()
{
    std::vector<Column> cols{{"country", FieldType::Nominal},
                             {"year", FieldType::Quantitative},
                             {"fertility", FieldType::Quantitative},
                             {"life_expect", FieldType::Quantitative},
                             {"pop", FieldType::Quantitative}};
    std::vector<Row> rows;
    int c = 0;
    for (const char* country : {"A", "B", "C"}) {
        for (int y = 1955; y <= 2005; y += 5) {
            double k = (y - 1955) / 5.0;
            rows.push_back({Value(country), Value(y), Value(6.0 - 0.3 * k - c), Value(40.0 + 2 * k + 5 * c),
                            Value(1e6 * (c + 1) + 1e4 * k)});
        }
        ++c;
    }
    return DataTable(cols, rows);
}

Spec spec_from(const char* text) { return parse_spec(std::string_view(text)); }

const char* kGapminder = R"({
  "data": {"url": "gapminder.csv"},
  "mark": "circle",
  "encoding": {
    "x": {"field": "fertility", "type": "quantitative"},
    "y": {"field": "life_expect", "type": "quantitative"},
    "color": {"field": "country", "type": "nominal"},
    "size": {"field": "pop", "type": "quantitative"},
    "time": {"field": "year"}
  }
})";

bool has_message(const std::vector<Diagnostic>& diags, const std::string& needle)
{
    for (const auto& d : diags) {
        if (d.message.find(needle) != std::string::npos) return true;
    }
    return false;
}

} // namespace

// ---------------------------------------------------------------------------
// value

TEST(Value, NumberFormatting)
{
    EXPECT_EQ(format_number(1955), "1955");
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(1.0 / 3), "0.3333333333333333");
    EXPECT_EQ(format_fixed(-0.0001), "0.000");
    EXPECT_EQ(format_fixed(2.5, 1), "2.5");
}

TEST(Value, CompareAcrossNumberAndTimestamp)
{
    EXPECT_EQ(compare_values(Value(5.0), Value(Timestamp{5})), std::strong_ordering::equal);
    EXPECT_EQ(compare_values(Value("a"), Value("b")), std::strong_ordering::less);
    EXPECT_THROW(compare_values(Value("a"), Value(1)), TypeError);
}

TEST(Value, TimestampRoundTrip)
{
    auto t = parse_timestamp("2020-03-01");
    ASSERT_TRUE(t);
    EXPECT_EQ(format_timestamp(*t), "2020-03-01");
    auto u = parse_timestamp("1970-01-02T06:30:00Z");
    ASSERT_TRUE(u);
    EXPECT_DOUBLE_EQ(u->ms, 86400000.0 + 6.5 * 3600000.0);
    EXPECT_EQ(format_timestamp(*u), "1970-01-02T06:30:00.000Z");
    EXPECT_FALSE(parse_timestamp("2020-13-01"));
    EXPECT_FALSE(parse_timestamp("hello"));
}

TEST(Value, Truthiness)
{
    EXPECT_FALSE(truthy(Value()));
    EXPECT_FALSE(truthy(Value(0)));
    EXPECT_TRUE(truthy(Value(2)));
    EXPECT_FALSE(truthy(Value("")));
    EXPECT_TRUE(truthy(Value(true)));
}

// ---------------------------------------------------------------------------
// data

TEST(Data, CsvInfersColumnTypes)
{
    DataTable t = parse_csv("name,year,when,flag\na,1955,2001-01-01,true\n\"b, c\",1960,2001-02-01,false\n");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t.column("name").type, FieldType::Nominal);
    EXPECT_EQ(t.column("year").type, FieldType::Quantitative);
    EXPECT_EQ(t.column("when").type, FieldType::Temporal);
    EXPECT_EQ(t.at(1, "name"), Value("b, c"));
    EXPECT_EQ(t.at(1, "flag"), Value(false));
}

TEST(Data, CsvEmptyCellsAreNull)
{
    DataTable t = parse_csv("a,b\n1,\n,x\n");
    EXPECT_TRUE(t.at(0, "b").is_null());
    EXPECT_TRUE(t.at(1, "a").is_null());
    EXPECT_EQ(t.column("a").type, FieldType::Quantitative);
}

TEST(Data, RaggedCsvRejected)
{
    EXPECT_THROW(parse_csv("a,b\n1\n"), SchemaError);
    EXPECT_THROW(parse_csv(""), SchemaError);
}

TEST(Data, RowsMustConform)
{
    DataTable t({{"x", FieldType::Quantitative}});
    EXPECT_THROW(t.add_row({Value("text")}), SchemaError);
    EXPECT_THROW(t.add_row({Value(1), Value(2)}), SchemaError);
    EXPECT_NO_THROW(t.add_row({Value()}));
    EXPECT_THROW(DataTable({{"x", FieldType::Nominal}, {"x", FieldType::Nominal}}), SchemaError);
}

TEST(Data, RecordsFillMissingWithNull)
{
    DataTable t = table_from_records({{{"a", Value(1)}}, {{"b", Value("z")}, {"a", Value(2)}}});
    ASSERT_EQ(t.columns().size(), 2u);
    EXPECT_EQ(t.columns()[0].name, "a");
    EXPECT_TRUE(t.at(0, "b").is_null());
    EXPECT_EQ(t.at(1, "a"), Value(2));
}

TEST(Data, LoadMissingFile) { EXPECT_THROW(load_csv("/nonexistent/file.csv"), IoError); }

// ---------------------------------------------------------------------------
// expr

TEST(Expr, Precedence)
{
    EXPECT_EQ(to_sexpr(*parse_expression("anim_value - 5")), "Sub(Ident(anim_value), Num(5))");
    EXPECT_EQ(to_sexpr(*parse_expression("1 + 2 * 3")), "Add(Num(1), Mul(Num(2), Num(3)))");
    EXPECT_EQ(to_sexpr(*parse_expression("a < 1 && b || !c")),
              "Or(And(Lt(Ident(a), Num(1)), Ident(b)), Not(Ident(c)))");
    EXPECT_EQ(to_sexpr(*parse_expression("-(x)")), "Neg(Ident(x))");
}

TEST(Expr, SyntaxErrorsCarryOffsets)
{
    try {
        parse_expression("1 + ");
        FAIL();
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.offset(), 4u);
    }
    EXPECT_THROW(parse_expression(""), SyntaxError);
    EXPECT_THROW(parse_expression("(1"), SyntaxError);
    EXPECT_THROW(parse_expression("'abc"), SyntaxError);
    EXPECT_THROW(parse_expression("1 2"), SyntaxError);
}

TEST(Expr, Evaluation)
{
    Env env{{"anim_value", Value(1960)}, {"is_playing", Value(true)}, {"name", Value("hawk")}};
    EXPECT_EQ(eval_expression(*parse_expression("anim_value - 5"), env), Value(1955));
    EXPECT_EQ(eval_expression(*parse_expression("name == 'hawk' && is_playing"), env), Value(true));
    EXPECT_EQ(eval_expression(*parse_expression("anim_value / 0 > 1"), env), Value(true));
    EXPECT_THROW(eval_expression(*parse_expression("missing + 1"), env), EvalError);
    EXPECT_THROW(eval_expression(*parse_expression("name + 1"), env), TypeError);
}

TEST(Expr, NullComparisonsAreFalse)
{
    Env env{{"v", Value()}};
    EXPECT_EQ(eval_expression(*parse_expression("v < 1"), env), Value(false));
    EXPECT_EQ(eval_expression(*parse_expression("v >= 1"), env), Value(false));
    EXPECT_EQ(eval_expression(*parse_expression("v == null"), env), Value(true));
    EXPECT_EQ(eval_expression(*parse_expression("v != 1"), env), Value(true));
}

TEST(Expr, ShortCircuit)
{
    Env env{{"f", Value(false)}};
    EXPECT_EQ(eval_expression(*parse_expression("f && unknown"), env), Value(false));
}

TEST(Expr, TimestampArithmetic)
{
    Env env{{"t", Value(Timestamp{1000})}};
    EXPECT_EQ(eval_expression(*parse_expression("t + 500"), env), Value(Timestamp{1500}));
    EXPECT_EQ(eval_expression(*parse_expression("t - t"), env), Value(0));
}

TEST(Expr, FreeIdentifiers)
{
    auto ids = free_identifiers(*parse_expression("day >= anim_value - 5 && is_playing"));
    EXPECT_EQ(ids, (std::set<std::string>{"anim_value", "day", "is_playing"}));
}

// ---------------------------------------------------------------------------
// easing

TEST(Easing, EndpointsAndMonotone)
{
    for (const auto& [e, name] : kEasingNames) {
        EXPECT_NEAR(ease(e, 0), 0, 1e-9) << name;
        EXPECT_NEAR(ease(e, 1), 1, 1e-9) << name;
        double prev = -1;
        for (int i = 0; i <= 200; ++i) {
            double y = ease(e, i / 200.0);
            EXPECT_GE(y, prev - 1e-12) << name;
            prev = y;
        }
    }
}

TEST(Easing, KnownValues)
{
    EXPECT_DOUBLE_EQ(ease(Easing::QuadIn, 0.5), 0.25);
    EXPECT_DOUBLE_EQ(ease(Easing::CubicInOut, 0.25), 0.0625);
    EXPECT_DOUBLE_EQ(ease(Easing::CubicInOut, 0.5), 0.5);
    EXPECT_NEAR(ease(Easing::SinInOut, 0.5), 0.5, 1e-15);
}

TEST(Easing, InverseRoundTrips)
{
    for (const auto& [e, name] : kEasingNames) {
        for (double y : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) {
            EXPECT_NEAR(ease(e, invert_easing(e, y)), y, 1e-9) << name;
        }
    }
}

TEST(Easing, Lookup)
{
    EXPECT_EQ(find_easing("cubic-in-out"), Easing::CubicInOut);
    EXPECT_FALSE(find_easing("bounce"));
    EXPECT_THROW(apply_easing("bounce", 0.5), Error);
}

// ---------------------------------------------------------------------------
// spec parsing

TEST(SpecParse, MinimalTimeEncoding)
{
    Spec s = spec_from(kGapminder);
    EXPECT_EQ(s.mark.type, MarkType::Circle);
    ASSERT_TRUE(s.time);
    EXPECT_EQ(s.time->field, "year");
    EXPECT_FALSE(s.time->key.has_value());
    EXPECT_EQ(s.data.url, "gapminder.csv");
}

TEST(SpecParse, RoundTripsThroughJson)
{
    Spec s = spec_from(kGapminder);
    Spec again = parse_spec(to_json(s));
    EXPECT_EQ(s, again);
}

TEST(SpecParse, MissingTopLevelKeys)
{
    try {
        spec_from(R"({"encoding": {}})");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("data"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("mark"), std::string::npos);
    }
}

TEST(SpecParse, MalformedJsonIsSyntaxError) { EXPECT_THROW(spec_from("{\"data\": "), SyntaxError); }

TEST(SpecParse, UnknownKeysWarn)
{
    std::vector<Diagnostic> w;
    parse_spec(std::string_view(R"({"data": {"values": []}, "mark": "point", "colour": 1})"), &w);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0].severity, Severity::Warning);
    EXPECT_EQ(w[0].path, "/colour");
}

TEST(SpecParse, KeyNullMeansNoKey)
{
    Spec s = spec_from(R"({"data": {"values": []}, "mark": "point",
                           "encoding": {"time": {"field": "t", "key": null}}})");
    ASSERT_TRUE(s.time->key.has_value());
    EXPECT_FALSE(s.time->key->has_value());
}

TEST(SpecParse, SelectionForms)
{
    Spec s = spec_from(R"({
      "data": {"values": []}, "mark": "point",
      "params": [
        {"name": "a", "select": "point"},
        {"name": "b", "select": {"type": "point", "on": {"type": "timer", "filter": "is_playing"},
                                 "predicate": {"and": [{"field": "d", "gte": "anim_value - 5"},
                                                       {"field": "d", "lte": "anim_value"}]},
                                 "pause": [{"value": 3, "duration": 100}], "easing": "quad-in"},
         "bind": "range"}
      ]
    })");
    const auto* b = s.find_selection("b");
    ASSERT_TRUE(b);
    EXPECT_TRUE(b->animated());
    ASSERT_TRUE(b->predicate);
    ASSERT_EQ(b->predicate->size(), 2u);
    EXPECT_EQ((*b->predicate)[0].op, CompareOp::Gte);
    EXPECT_EQ((*b->predicate)[1].rhs, "anim_value");
    EXPECT_EQ(b->on.filter, "is_playing");
    ASSERT_TRUE(b->pause);
    EXPECT_EQ((*b->pause)[0].duration, 100);
    EXPECT_FALSE(s.find_selection("a")->animated());
}

TEST(SpecParse, BadPredicateExpressionReportsPath)
{
    try {
        spec_from(R"({"data": {"url": "x"}, "mark": "point",
            "params": [{"name": "s", "select": {"type": "point", "on": "timer",
                        "predicate": {"field": "year", "lte": "anim_value +"}}}]})");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.path(), "/params/0/select/predicate/lte");
    }
}

// ---------------------------------------------------------------------------
// validation

TEST(Validate, GapminderIsValid)
{
    EXPECT_TRUE(validate_spec(spec_from(kGapminder), gapminder_table()).empty());
}

TEST(Validate, UnknownFields)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "encoding": {"x": {"field": "nope"}, "time": {"field": "when"}}})");
    auto d = validate_spec(s, gapminder_table());
    EXPECT_TRUE(has_errors(d));
    EXPECT_TRUE(has_message(d, "unknown field \"nope\""));
    EXPECT_TRUE(has_message(d, "unknown field \"when\""));
}

TEST(Validate, KeyMustBeUniqueWithinKeyframe)
{
    DataTable t = gapminder_table();
    t.add_row({Value("A"), Value(1960), Value(1), Value(1), Value(1)});
    auto d = validate_spec(spec_from(kGapminder), t);
    ASSERT_TRUE(has_errors(d));
    EXPECT_TRUE(has_message(d, "key not unique within keyframe"));
}

TEST(Validate, TimerSelectionNeedsTimeEncoding)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "params": [{"name": "s", "select": {"type": "point", "on": "timer"}}]})");
    EXPECT_TRUE(has_message(validate_spec(s, gapminder_table()), "requires a time encoding"));
}

TEST(Validate, PauseValueOutsideDomain)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "params": [{"name": "s", "select": {"type": "point", "on": "timer",
                                            "pause": [{"value": 1956, "duration": 10}]}}],
        "encoding": {"time": {"field": "year"}}})");
    EXPECT_TRUE(has_message(validate_spec(s, gapminder_table()), "not in the time domain"));
}

TEST(Validate, UndeclaredSelectionInFilter)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "transform": [{"filter": {"param": "ghost"}}]})");
    EXPECT_TRUE(has_message(validate_spec(s, gapminder_table()), "undeclared selection"));
}

TEST(Validate, UnboundIdentifierInPredicate)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "params": [{"name": "s", "select": {"type": "point", "on": "timer",
                    "predicate": {"field": "year", "lte": "anim_value + offset"}}}],
        "encoding": {"time": {"field": "year"}}})");
    EXPECT_TRUE(has_message(validate_spec(s, gapminder_table()), "unbound identifier \"offset\""));
}

TEST(Validate, UnknownEasing)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "params": [{"name": "s", "select": {"type": "point", "on": "timer", "easing": "bounce"}}],
        "encoding": {"time": {"field": "year"}}})");
    EXPECT_TRUE(has_message(validate_spec(s, gapminder_table()), "unknown easing"));
}

TEST(Validate, ContinuousDomainShape)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "encoding": {"time": {"field": "year", "scale": {"type": "linear", "domain": [2000, 1990]}}}})");
    EXPECT_TRUE(has_errors(validate_spec(s, gapminder_table())));
}

// ---------------------------------------------------------------------------
// normalization

TEST(Normalize, GapminderElaboration)
{
    auto n = normalize(spec_from(kGapminder), gapminder_table());
    const auto& te = *n.spec.time;
    EXPECT_EQ(te.key, std::optional<std::string>("country"));
    ASSERT_TRUE(te.scale);
    EXPECT_EQ(te.scale->step, 500);
    ASSERT_TRUE(te.scale->domain);
    EXPECT_EQ(te.scale->domain->size(), 11u);
    EXPECT_EQ(te.scale->domain->front(), Value(1955));
    const auto* sel = n.spec.find_selection("current_frame");
    ASSERT_TRUE(sel);
    EXPECT_TRUE(sel->animated());
    ASSERT_TRUE(sel->predicate);
    ASSERT_EQ(sel->predicate->size(), 1u);
    EXPECT_EQ((*sel->predicate)[0].field, "year");
    EXPECT_EQ((*sel->predicate)[0].op, CompareOp::Eq);
    EXPECT_EQ((*sel->predicate)[0].rhs, "anim_value");
    ASSERT_EQ(n.spec.transforms.size(), 1u);
    EXPECT_EQ(n.spec.transforms[0].selection, std::optional<std::string>("current_frame"));
}

TEST(Normalize, Idempotent)
{
    auto data = gapminder_table();
    auto once = normalize(spec_from(kGapminder), data);
    auto twice = normalize(once.spec, data);
    EXPECT_EQ(once.spec, twice.spec);
}

TEST(Normalize, ExplicitSelectionNotDuplicated)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "params": [{"name": "frame", "select": {"type": "point", "on": "timer"}}],
        "transform": [{"filter": {"param": "frame"}}],
        "encoding": {"color": {"field": "country"}, "time": {"field": "year"}}})");
    auto n = normalize(s, gapminder_table());
    EXPECT_EQ(n.spec.params.size(), 1u);
    EXPECT_EQ(n.spec.transforms.size(), 1u);
}

TEST(Normalize, NoKeyInferredWithoutCategoricalChannel)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "encoding": {"x": {"field": "fertility"}, "time": {"field": "year"}}})");
    auto n = normalize(s, gapminder_table());
    ASSERT_TRUE(n.spec.time->key.has_value());
    EXPECT_FALSE(n.spec.time->key->has_value());
    EXPECT_EQ(n.notes.size(), 1u);
}

TEST(Normalize, DetailChannelWinsOverColor)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "encoding": {"detail": {"field": "pop"}, "color": {"field": "country"}, "time": {"field": "year"}}})");
    EXPECT_EQ(infer_key(s, gapminder_table()), std::optional<std::string>("pop"));
}

TEST(Normalize, ExplicitDurationKept)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "encoding": {"time": {"field": "year", "scale": {"range": {"duration": 11000}}}}})");
    auto n = normalize(s, gapminder_table());
    EXPECT_EQ(n.spec.time->scale->duration, 11000);
    EXPECT_FALSE(n.spec.time->scale->step);
}

TEST(Normalize, ChannelTypesFilledFromData)
{
    Spec s = spec_from(R"({"data": {"url": "x"}, "mark": "circle",
        "encoding": {"x": {"field": "fertility"}, "color": {"field": "country"}}})");
    auto n = normalize(s, gapminder_table());
    EXPECT_EQ(n.spec.encoding.at("x").base.field->type, FieldType::Quantitative);
    EXPECT_EQ(n.spec.encoding.at("color").base.field->type, FieldType::Nominal);
    EXPECT_FALSE(n.spec.time);
}
