#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "animflow/compile.hpp"
#include "animflow/events.hpp"
#include "animflow/validate.hpp"

namespace animflow {

// Chart failed validation; carries every diagnostic found.
class SpecError : public Error
{
public:
    explicit SpecError(std::vector<Diagnostic> diags)
        : Error(diags.empty() ? "invalid spec" : to_string(diags.front())), diags_(std::move(diags))
    {
    }

    const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

// Loads a table from a .json array of records or a CSV file.
inline DataTable load_table(const std::filesystem::path& path)
{
    std::string text = read_file(path);
    if (path.extension() == ".json") {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw SyntaxError(path.string() + ": invalid JSON", e.byte);
        }
        return detail::table_from_json_records(j, "");
    }
    return parse_csv(text);
}

// Inline rows win, then an explicit data path, then the chart's url relative
// to `base_dir`.
inline DataTable resolve_data(const Spec& spec, const std::optional<std::filesystem::path>& data_path,
                              const std::filesystem::path& base_dir)
{
    if (spec.data.values) return *spec.data.values;
    if (data_path) return load_table(*data_path);
    if (spec.data.url) {
        std::filesystem::path p(*spec.data.url);
        return load_table(p.is_absolute() ? p : base_dir / p);
    }
    throw SchemaError("/data", "no data: give inline values, a url, or a data file");
}

struct Document
{
    Spec spec;
    std::shared_ptr<const DataTable> data;
    std::vector<Diagnostic> warnings;
};

inline Document load_document(const std::filesystem::path& spec_path,
                              const std::optional<std::filesystem::path>& data_path = std::nullopt)
{
    Document doc;
    std::string text = read_file(spec_path);
    doc.spec = parse_spec(std::string_view(text), &doc.warnings);
    doc.data = std::make_shared<const DataTable>(resolve_data(doc.spec, data_path, spec_path.parent_path()));
    return doc;
}

struct Program
{
    NormalizedSpec normalized;
    std::shared_ptr<const DataflowGraph> graph;
    std::shared_ptr<const DataTable> data;

    RuntimeState start() const { return init(graph, data); }
};

// validate -> normalize -> compile. Throws SpecError on invalid input.
inline Program build_program(const Spec& spec, std::shared_ptr<const DataTable> data)
{
    auto diags = validate_spec(spec, *data);
    if (has_errors(diags)) throw SpecError(std::move(diags));
    Program p;
    p.normalized = normalize(spec, *data);
    p.graph = std::make_shared<const DataflowGraph>(compile(p.normalized, *data));
    p.data = std::move(data);
    return p;
}

inline Program build_program(const Spec& spec, const DataTable& data)
{
    return build_program(spec, std::make_shared<const DataTable>(data));
}

inline Program build_program(const Document& doc) { return build_program(doc.spec, doc.data); }

// Length of one loop of the primary timer selection, or 0 for static specs.
inline double cycle_length(const DataflowGraph& g)
{
    if (g.primary_selection.empty()) return 0;
    const auto* c = g.find<SignalNode>(signal_id(g.primary_selection + "_cycle"));
    return c ? c->cycle_ms : 0;
}

inline std::string render_frame_svg(const RuntimeState& st) { return render_svg(encode_frame(st)); }

} // namespace animflow
