#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "animflow/pipeline.hpp"

namespace animflow {

enum ExitCode : int
{
    kExitOk = 0,
    kExitSpec = 1,
    kExitIo = 2,
    kExitInternal = 3,
};

enum class DiagnosticFormat
{
    Text,
    Structured,
};

enum class FrameFormat
{
    Svg,
    FrameDoc,
};

struct RenderConfig
{
    double fps = 30;
    int cycles = 1;
    std::filesystem::path out_dir = "frames";
    FrameFormat format = FrameFormat::Svg;
};

struct CommonOptions
{
    std::filesystem::path spec;
    std::optional<std::filesystem::path> data;
    DiagnosticFormat diag_format = DiagnosticFormat::Text;
};

inline Json diagnostic_to_json(const Diagnostic& d)
{
    return {{"severity", d.severity == Severity::Error ? "error" : "warning"}, {"path", d.path}, {"message", d.message}};
}

inline Json diagnostics_to_json(const std::vector<Diagnostic>& diags)
{
    Json arr = Json::array();
    for (const auto& d : diags) arr.push_back(diagnostic_to_json(d));
    return arr;
}

inline void print_diagnostics(std::ostream& err, const std::vector<Diagnostic>& diags, DiagnosticFormat fmt)
{
    if (fmt == DiagnosticFormat::Structured) {
        err << Json{{"ok", !has_errors(diags)}, {"diagnostics", diagnostics_to_json(diags)}}.dump() << "\n";
        return;
    }
    for (const auto& d : diags) err << to_string(d) << "\n";
}

// Maps an exception to a diagnostic list and an exit code.
inline std::pair<int, std::vector<Diagnostic>> classify_error(const std::exception& e)
{
    if (const auto* s = dynamic_cast<const SpecError*>(&e)) return {kExitSpec, s->diagnostics()};
    if (const auto* c = dynamic_cast<const CompileError*>(&e)) return {kExitSpec, c->diagnostics()};
    if (const auto* s = dynamic_cast<const SchemaError*>(&e)) {
        std::string msg = e.what();
        std::string prefix = s->path() + ": ";
        if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
        return {kExitSpec, {{Severity::Error, s->path(), msg}}};
    }
    if (dynamic_cast<const SyntaxError*>(&e) || dynamic_cast<const EvalError*>(&e)
        || dynamic_cast<const TypeError*>(&e)) {
        return {kExitSpec, {{Severity::Error, "", e.what()}}};
    }
    if (dynamic_cast<const IoError*>(&e)) return {kExitIo, {{Severity::Error, "", e.what()}}};
    return {kExitInternal, {{Severity::Error, "", std::string("internal error: ") + e.what()}}};
}

inline int report_failure(const std::exception& e, std::ostream& err, DiagnosticFormat fmt)
{
    auto [code, diags] = classify_error(e);
    print_diagnostics(err, diags, fmt);
    return code;
}

template <typename Body>
int guarded(std::ostream& err, DiagnosticFormat fmt, Body&& body)
{
    try {
        return body();
    } catch (const std::exception& e) {
        return report_failure(e, err, fmt);
    }
}

inline int cmd_validate(const CommonOptions& opt, std::ostream& err)
{
    return guarded(err, opt.diag_format, [&] {
        Document doc = load_document(opt.spec, opt.data);
        auto diags = doc.warnings;
        auto found = validate_spec(doc.spec, *doc.data);
        diags.insert(diags.end(), found.begin(), found.end());
        if (!has_errors(diags)) {
            // Compilation can still reject what validation accepts.
            Program p = build_program(doc);
            diags.insert(diags.end(), p.normalized.notes.begin(), p.normalized.notes.end());
        }
        print_diagnostics(err, diags, opt.diag_format);
        return has_errors(diags) ? kExitSpec : kExitOk;
    });
}

struct CompileOptions
{
    CommonOptions common;
    std::optional<std::filesystem::path> out;
    bool normalized_only = false;
};

inline std::string compile_document(const Document& doc, bool normalized_only)
{
    Program p = build_program(doc);
    Json j = normalized_only ? to_json(p.normalized.spec) : to_json(*p.graph);
    return j.dump(2) + "\n";
}

inline int cmd_compile(const CompileOptions& opt, std::ostream& out, std::ostream& err)
{
    return guarded(err, opt.common.diag_format, [&] {
        Document doc = load_document(opt.common.spec, opt.common.data);
        print_diagnostics(err, doc.warnings, opt.common.diag_format);
        std::string text = compile_document(doc, opt.normalized_only);
        if (opt.out) write_file(*opt.out, text);
        else out << text;
        return kExitOk;
    });
}

// Number of frames for `cycles` loops at `fps`; a static chart gets one.
inline std::size_t frame_count(double cycle_ms, int cycles, double fps)
{
    if (cycle_ms <= 0) return 1;
    double n = cycle_ms * cycles * fps / 1000.0;
    return static_cast<std::size_t>(std::ceil(n - 1e-9));
}

inline std::string frame_name(std::size_t i, FrameFormat fmt)
{
    std::ostringstream ss;
    ss << "frame_" << std::setw(4) << std::setfill('0') << i << (fmt == FrameFormat::Svg ? ".svg" : ".json");
    return ss.str();
}

inline std::string frame_bytes(const RuntimeState& st, FrameFormat fmt)
{
    Scenegraph sg = encode_frame(st);
    return fmt == FrameFormat::Svg ? render_svg(sg) : frame_to_json(sg).dump(2) + "\n";
}

// Collects frames in memory and writes them with a hash manifest.
class FrameSink
{
public:
    FrameSink(std::filesystem::path dir, FrameFormat fmt) : dir_(std::move(dir)), fmt_(fmt) {}

    void add(const RuntimeState& st) { frames_.push_back(frame_bytes(st, fmt_)); }

    const std::vector<std::string>& frames() const { return frames_; }

    std::string manifest() const
    {
        std::string out;
        for (std::size_t i = 0; i < frames_.size(); ++i) {
            out += frame_name(i, fmt_) + " " + frame_hash(frames_[i]) + "\n";
        }
        return out;
    }

    void write() const
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
        for (std::size_t i = 0; i < frames_.size(); ++i) write_file(dir_ / frame_name(i, fmt_), frames_[i]);
        write_file(dir_ / "manifest.txt", manifest());
        if (fmt_ == FrameFormat::Svg) write_file(dir_ / "index.html", contact_sheet());
    }

private:
    std::string contact_sheet() const
    {
        std::string html = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>frames</title>\n"
                           "<style>body{font:12px sans-serif}figure{display:inline-block;margin:4px}"
                           "img{width:230px;border:1px solid #ddd}</style></head><body>\n";
        for (std::size_t i = 0; i < frames_.size(); ++i) {
            std::string name = frame_name(i, fmt_);
            html += "<figure><img src=\"" + name + "\" alt=\"" + name + "\"><figcaption>" + name
                    + "</figcaption></figure>\n";
        }
        return html + "</body></html>\n";
    }

    std::filesystem::path dir_;
    FrameFormat fmt_;
    std::vector<std::string> frames_;
};

// Frame i is the state after i advances of 1000/fps ms.
inline std::vector<std::string> render_frames(const Program& p, const RenderConfig& cfg, FrameSink& sink)
{
    if (!(cfg.fps > 0)) throw SchemaError("/fps", "fps must be positive");
    if (cfg.cycles < 1) throw SchemaError("/cycles", "cycles must be at least 1");
    RuntimeState st = p.start();
    std::size_t n = frame_count(cycle_length(*p.graph), cfg.cycles, cfg.fps);
    double dt = 1000.0 / cfg.fps;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) advance(st, dt);
        sink.add(st);
    }
    return sink.frames();
}

struct RenderOptions
{
    CommonOptions common;
    RenderConfig config;
};

inline int cmd_render(const RenderOptions& opt, std::ostream& out, std::ostream& err)
{
    return guarded(err, opt.common.diag_format, [&] {
        Document doc = load_document(opt.common.spec, opt.common.data);
        print_diagnostics(err, doc.warnings, opt.common.diag_format);
        Program p = build_program(doc);
        FrameSink sink(opt.config.out_dir, opt.config.format);
        render_frames(p, opt.config, sink);
        sink.write();
        out << sink.frames().size() << " frames written to " << opt.config.out_dir.string() << "\n";
        return kExitOk;
    });
}

struct TraceOptions
{
    CommonOptions common;
    std::filesystem::path trace;
    std::filesystem::path out_dir = "frames";
    FrameFormat format = FrameFormat::Svg;
};

inline std::vector<std::string> trace_frames(const Program& p, const std::vector<TraceRecord>& trace, FrameSink& sink)
{
    RuntimeState st = p.start();
    replay_trace(st, trace, [&](const RuntimeState& s) { sink.add(s); });
    return sink.frames();
}

inline int cmd_trace(const TraceOptions& opt, std::ostream& out, std::ostream& err)
{
    return guarded(err, opt.common.diag_format, [&] {
        Document doc = load_document(opt.common.spec, opt.common.data);
        print_diagnostics(err, doc.warnings, opt.common.diag_format);
        Program p = build_program(doc);
        auto trace = parse_trace(read_file(opt.trace));
        FrameSink sink(opt.out_dir, opt.format);
        trace_frames(p, trace, sink);
        sink.write();
        out << sink.frames().size() << " frames written to " << opt.out_dir.string() << "\n";
        return kExitOk;
    });
}

} // namespace animflow
