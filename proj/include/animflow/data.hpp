#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "animflow/value.hpp"

namespace animflow {

enum class FieldType
{
    Quantitative,
    Ordinal,
    Nominal,
    Temporal
};

inline const char* to_string(FieldType t)
{
    switch (t) {
    case FieldType::Quantitative: return "quantitative";
    case FieldType::Ordinal: return "ordinal";
    case FieldType::Nominal: return "nominal";
    case FieldType::Temporal: return "temporal";
    }
    return "?";
}

inline std::optional<FieldType> parse_field_type(std::string_view s)
{
    if (s == "quantitative") return FieldType::Quantitative;
    if (s == "ordinal") return FieldType::Ordinal;
    if (s == "nominal") return FieldType::Nominal;
    if (s == "temporal") return FieldType::Temporal;
    return std::nullopt;
}

inline bool is_discrete(FieldType t)
{
    return t == FieldType::Ordinal || t == FieldType::Nominal;
}

struct Column
{
    std::string name;
    FieldType type = FieldType::Nominal;

    friend bool operator==(const Column&, const Column&) = default;
};

using Row = std::vector<Value>;

inline bool conforms(const Value& v, FieldType type)
{
    if (v.is_null()) {
        return true;
    }
    switch (type) {
    case FieldType::Quantitative: return v.is_number();
    case FieldType::Temporal: return v.is_timestamp();
    case FieldType::Ordinal:
    case FieldType::Nominal: return !v.is_timestamp();
    }
    return false;
}

// Column-typed table of rows. Every row has one value per column and values
// conform to their column's field type.
class DataTable
{
public:
    DataTable() = default;

    explicit DataTable(std::vector<Column> columns) : columns_(std::move(columns))
    {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (!index_.emplace(columns_[i].name, i).second) {
                throw SchemaError("/columns/" + std::to_string(i),
                                  "duplicate column \"" + columns_[i].name + "\"");
            }
        }
    }

    DataTable(std::vector<Column> columns, std::vector<Row> rows) : DataTable(std::move(columns))
    {
        rows_.reserve(rows.size());
        for (auto& r : rows) {
            add_row(std::move(r));
        }
    }

    void add_row(Row row)
    {
        if (row.size() != columns_.size()) {
            throw SchemaError("/rows/" + std::to_string(rows_.size()),
                              "expected " + std::to_string(columns_.size()) + " values, got "
                                  + std::to_string(row.size()));
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!conforms(row[i], columns_[i].type)) {
                throw SchemaError("/rows/" + std::to_string(rows_.size()) + "/" + columns_[i].name,
                                  std::string(to_string(row[i].kind())) + " value in "
                                      + to_string(columns_[i].type) + " column");
            }
        }
        rows_.push_back(std::move(row));
    }

    const std::vector<Column>& columns() const noexcept { return columns_; }
    const std::vector<Row>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }

    std::optional<std::size_t> column_index(std::string_view name) const
    {
        auto it = index_.find(name);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    bool has_column(std::string_view name) const { return column_index(name).has_value(); }

    const Column& column(std::string_view name) const
    {
        auto idx = column_index(name);
        if (!idx) {
            throw SchemaError("/columns", "unknown field \"" + std::string(name) + "\"");
        }
        return columns_[*idx];
    }

    const Value& at(std::size_t row, std::size_t col) const { return rows_.at(row).at(col); }

    const Value& at(std::size_t row, std::string_view name) const
    {
        auto idx = column_index(name);
        if (!idx) {
            throw SchemaError("/columns", "unknown field \"" + std::string(name) + "\"");
        }
        return rows_.at(row).at(*idx);
    }

    // Copy with the same columns and no rows.
    DataTable empty_like() const { return DataTable(columns_); }

    friend bool operator==(const DataTable& a, const DataTable& b)
    {
        return a.columns_ == b.columns_ && a.rows_ == b.rows_;
    }

private:
    std::vector<Column> columns_;
    std::vector<Row> rows_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

// Default field type for a column holding the given values.
inline FieldType infer_field_type(const std::vector<Value>& values)
{
    bool any = false;
    bool all_numbers = true;
    bool all_timestamps = true;
    for (const auto& v : values) {
        if (v.is_null()) {
            continue;
        }
        any = true;
        all_numbers = all_numbers && v.is_number();
        all_timestamps = all_timestamps && v.is_timestamp();
    }
    if (any && all_numbers) return FieldType::Quantitative;
    if (any && all_timestamps) return FieldType::Temporal;
    return FieldType::Nominal;
}

// Builds a table from records given as ordered (name, value) lists. Column
// order follows first appearance; missing fields become null. String values
// that all parse as ISO dates are promoted to timestamps.
inline DataTable table_from_records(const std::vector<std::vector<std::pair<std::string, Value>>>& records)
{
    std::vector<std::string> names;
    std::map<std::string, std::size_t, std::less<>> index;
    for (const auto& rec : records) {
        for (const auto& [name, v] : rec) {
            if (index.emplace(name, names.size()).second) {
                names.push_back(name);
            }
        }
    }
    std::vector<std::vector<Value>> cols(names.size(), std::vector<Value>(records.size()));
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (const auto& [name, v] : records[r]) {
            cols[index[name]][r] = v;
        }
    }
    std::vector<Column> columns;
    for (std::size_t c = 0; c < names.size(); ++c) {
        auto& values = cols[c];
        bool all_dates = false;
        for (const auto& v : values) {
            if (v.is_null()) continue;
            all_dates = v.is_string() && parse_timestamp(v.as_string()).has_value();
            if (!all_dates) break;
        }
        if (all_dates) {
            for (auto& v : values) {
                if (!v.is_null()) v = Value(*parse_timestamp(v.as_string()));
            }
        }
        FieldType type = infer_field_type(values);
        // Mixed kinds degrade to nominal strings so every value conforms.
        if (type == FieldType::Nominal) {
            for (auto& v : values) {
                if (v.is_timestamp()) v = Value(to_display(v));
            }
        }
        columns.push_back({names[c], type});
    }
    DataTable table(std::move(columns));
    for (std::size_t r = 0; r < records.size(); ++r) {
        Row row;
        row.reserve(names.size());
        for (std::size_t c = 0; c < names.size(); ++c) {
            row.push_back(cols[c][r]);
        }
        table.add_row(std::move(row));
    }
    return table;
}

namespace detail {

inline std::vector<std::vector<std::string>> split_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t i = 0;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
            } else {
                field += c;
            }
            ++i;
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' || c == '\n') {
            end_field();
            records.push_back(std::move(record));
            record.clear();
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (quoted) {
        throw SyntaxError("unterminated quoted field", text.size());
    }
    if (field_started || !record.empty()) {
        end_field();
        records.push_back(std::move(record));
    }
    return records;
}

inline std::optional<double> parse_double(std::string_view s)
{
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

} // namespace detail

// RFC-4180 CSV with a required header row. Column kinds are inferred per
// column: numbers, then ISO timestamps, then booleans, else strings. Empty
// cells are null.
inline DataTable parse_csv(std::string_view text)
{
    auto records = detail::split_csv(text);
    while (!records.empty() && records.back().size() == 1 && records.back()[0].empty()) {
        records.pop_back();
    }
    if (records.empty()) {
        throw SchemaError("/", "CSV input has no header row");
    }
    const auto& header = records.front();
    std::size_t ncols = header.size();
    std::vector<Column> columns;
    std::vector<std::vector<Value>> cols(ncols);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != ncols) {
            throw SchemaError("/rows/" + std::to_string(r - 1),
                              "expected " + std::to_string(ncols) + " fields, got "
                                  + std::to_string(records[r].size()));
        }
    }
    for (std::size_t c = 0; c < ncols; ++c) {
        bool numbers = true, dates = true, bools = true;
        for (std::size_t r = 1; r < records.size(); ++r) {
            const auto& cell = records[r][c];
            if (cell.empty()) continue;
            numbers = numbers && detail::parse_double(cell).has_value();
            dates = dates && parse_timestamp(cell).has_value();
            bools = bools && (cell == "true" || cell == "false");
        }
        auto& out = cols[c];
        for (std::size_t r = 1; r < records.size(); ++r) {
            const auto& cell = records[r][c];
            if (cell.empty()) {
                out.emplace_back();
            } else if (numbers) {
                out.emplace_back(*detail::parse_double(cell));
            } else if (dates) {
                out.emplace_back(*parse_timestamp(cell));
            } else if (bools) {
                out.emplace_back(cell == "true");
            } else {
                out.emplace_back(cell);
            }
        }
        columns.push_back({header[c], infer_field_type(out)});
    }
    DataTable table(std::move(columns));
    for (std::size_t r = 0; r + 1 < records.size(); ++r) {
        Row row;
        row.reserve(ncols);
        for (std::size_t c = 0; c < ncols; ++c) {
            row.push_back(cols[c][r]);
        }
        table.add_row(std::move(row));
    }
    return table;
}

inline DataTable load_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

} // namespace animflow
