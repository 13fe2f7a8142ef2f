#include <iostream>

#include <CLI11.hpp>

#include "animflow/service.hpp"

using namespace animflow;

namespace {

void add_common(CLI::App* cmd, CommonOptions& opt, bool diag_format)
{
    cmd->add_option("spec", opt.spec, "Spec file (JSON)")->required();
    cmd->add_option("--data", opt.data, "Data file (CSV or JSON records); inline rows take precedence");
    if (!diag_format) return;
    cmd->add_option("--format", opt.diag_format, "Diagnostic format")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, DiagnosticFormat>{{"text", DiagnosticFormat::Text},
                                                    {"structured", DiagnosticFormat::Structured}}))
        ->option_text("text|structured");
}

const std::map<std::string, FrameFormat> kFrameFormats{{"svg", FrameFormat::Svg}, {"frame-doc", FrameFormat::FrameDoc}};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"animflow: animated chart grammar compiler and runtime"};
    app.require_subcommand(1);

    CommonOptions validate_opt;
    auto* validate = app.add_subcommand("validate", "Check a spec against its data");
    add_common(validate, validate_opt, true);

    CompileOptions compile_opt;
    auto* compile = app.add_subcommand("compile", "Emit the dataflow graph as JSON");
    add_common(compile, compile_opt.common, true);
    compile->add_option("-o,--output", compile_opt.out, "Output file (default stdout)");
    compile->add_flag("--normalized-only", compile_opt.normalized_only, "Emit the elaborated spec instead");

    RenderOptions render_opt;
    auto* render = app.add_subcommand("render", "Render a frame sequence");
    add_common(render, render_opt.common, false);
    render->add_option("--fps", render_opt.config.fps, "Frames per second")->capture_default_str()->check(CLI::PositiveNumber);
    render->add_option("--cycles", render_opt.config.cycles, "Animation loops to render")->capture_default_str()->check(CLI::Range(1, 1000));
    render->add_option("-o,--out", render_opt.config.out_dir, "Output directory")->capture_default_str();
    render->add_option("--format", render_opt.config.format, "Frame format: svg or frame-doc")
        ->transform(CLI::CheckedTransformer(kFrameFormats))
        ->option_text("svg|frame-doc");

    TraceOptions trace_opt;
    auto* trace = app.add_subcommand("trace", "Replay an event trace and render each step");
    add_common(trace, trace_opt.common, false);
    trace->add_option("trace", trace_opt.trace, "Trace file (one JSON record per line)")->required();
    trace->add_option("-o,--out", trace_opt.out_dir, "Output directory")->capture_default_str();
    trace->add_option("--format", trace_opt.format, "Frame format: svg or frame-doc")
        ->transform(CLI::CheckedTransformer(kFrameFormats))
        ->option_text("svg|frame-doc");

    ServeOptions serve_opt;
    serve_opt.port = port_from_env(serve_opt.port);
    auto* serve = app.add_subcommand("serve", "Run the session service");
    serve->add_option("spec", serve_opt.spec, "Default spec for sessions created without one");
    serve->add_option("--data", serve_opt.data, "Data for the default spec");
    serve->add_option("--port", serve_opt.port, "Port (default 7878, or ANIMFLOW_PORT)")->check(CLI::Range(1, 65535));
    serve->add_option("--host", serve_opt.host, "Interface to bind");
    serve->add_option("--tick", serve_opt.tick_ms, "Autoplay tick in ms; 0 disables")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (*validate) return cmd_validate(validate_opt, std::cerr);
    if (*compile) return cmd_compile(compile_opt, std::cout, std::cerr);
    if (*render) return cmd_render(render_opt, std::cout, std::cerr);
    if (*trace) return cmd_trace(trace_opt, std::cout, std::cerr);
    if (*serve) return cmd_serve(serve_opt, std::cout, std::cerr);
    return kExitInternal;
}
