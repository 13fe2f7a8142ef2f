#include <chrono>
#include <filesystem>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "animflow/service.hpp"

using namespace animflow;
namespace fs = std::filesystem;

namespace {

std::string corpus(const std::string& name) { return std::string(ANIMFLOW_CORPUS) + "/" + name; }
std::string golden(const std::string& name) { return std::string(ANIMFLOW_GOLDEN) + "/" + name; }

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("animflow_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

CommonOptions common(const std::string& spec)
{
    CommonOptions o;
    o.spec = corpus(spec);
    return o;
}

std::vector<std::string> render(const std::string& spec, double fps, int cycles)
{
    Program p = build_program(load_document(corpus(spec)));
    FrameSink sink("unused", FrameFormat::Svg);
    RenderConfig cfg;
    cfg.fps = fps;
    cfg.cycles = cycles;
    return render_frames(p, cfg, sink);
}

Json spec_json(const std::string& name) { return Json::parse(read_file(corpus(name))); }

} // namespace

// ---------------------------------------------------------------------------
// validate

TEST(CliValidate, ValidSpec)
{
    std::ostringstream err;
    EXPECT_EQ(cmd_validate(common("gapminder.json"), err), kExitOk);
    EXPECT_EQ(err.str(), "");
}

TEST(CliValidate, MissingDataFile)
{
    auto opt = common("gapminder.json");
    opt.data = "/nonexistent/data.csv";
    std::ostringstream err;
    EXPECT_EQ(cmd_validate(opt, err), kExitIo);
    EXPECT_NE(err.str().find("cannot open"), std::string::npos);
}

TEST(CliValidate, MissingSpecFile)
{
    std::ostringstream err;
    CommonOptions opt;
    opt.spec = "/nonexistent/spec.json";
    EXPECT_EQ(cmd_validate(opt, err), kExitIo);
}

TEST(CliValidate, DuplicateKeyIsSpecError)
{
    fs::path dir = scratch("dupkey");
    std::string csv = read_file(corpus("gapminder.csv"));
    csv += "China,1960,5.0,50.0,600000000\n";
    write_file(dir / "gapminder.csv", csv);
    auto opt = common("gapminder.json");
    opt.data = dir / "gapminder.csv";
    std::ostringstream err;
    EXPECT_EQ(cmd_validate(opt, err), kExitSpec);
    EXPECT_NE(err.str().find("key not unique within keyframe"), std::string::npos);
}

TEST(CliValidate, StructuredDiagnostics)
{
    fs::path dir = scratch("structured");
    write_file(dir / "bad.json", R"({"data": {"values": [{"a": 1}]}, "mark": "circle",
                                    "encoding": {"x": {"field": "b"}}})");
    CommonOptions opt;
    opt.spec = dir / "bad.json";
    opt.diag_format = DiagnosticFormat::Structured;
    std::ostringstream err;
    EXPECT_EQ(cmd_validate(opt, err), kExitSpec);
    Json j = Json::parse(err.str());
    EXPECT_EQ(j["ok"], false);
    ASSERT_EQ(j["diagnostics"].size(), 1u);
    EXPECT_EQ(j["diagnostics"][0]["path"], "/encoding/x/field");
    EXPECT_EQ(j["diagnostics"][0]["severity"], "error");
}

TEST(CliValidate, MalformedJson)
{
    fs::path dir = scratch("malformed");
    write_file(dir / "bad.json", "{\"data\": ");
    CommonOptions opt;
    opt.spec = dir / "bad.json";
    std::ostringstream err;
    EXPECT_EQ(cmd_validate(opt, err), kExitSpec);
}

TEST(CliValidate, InlineDataWinsOverFlag)
{
    fs::path dir = scratch("inline");
    write_file(dir / "s.json", R"({"data": {"values": [{"t": 1, "v": 2}, {"t": 2, "v": 3}]}, "mark": "circle",
                                  "encoding": {"x": {"field": "v"}, "time": {"field": "t"}}})");
    CommonOptions opt;
    opt.spec = dir / "s.json";
    opt.data = "/nonexistent/data.csv";
    std::ostringstream err;
    EXPECT_EQ(cmd_validate(opt, err), kExitOk);
}

// ---------------------------------------------------------------------------
// compile

TEST(CliCompile, NormalizedMatchesGolden)
{
    CompileOptions opt{common("gapminder.json"), std::nullopt, true};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_compile(opt, out, err), kExitOk);
    EXPECT_EQ(Json::parse(out.str()), Json::parse(read_file(golden("gapminder.normalized.json"))));
}

TEST(CliCompile, IrMatchesGolden)
{
    fs::path dir = scratch("ir");
    CompileOptions opt{common("gapminder.json"), dir / "ir.json", false};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_compile(opt, out, err), kExitOk);
    EXPECT_EQ(out.str(), "");
    EXPECT_EQ(read_file(dir / "ir.json"), read_file(golden("gapminder.ir.json")));
}

TEST(CliCompile, StaticSpecHasZeroSignals)
{
    CompileOptions opt{common("gapminder_static.json"), std::nullopt, false};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_compile(opt, out, err), kExitOk);
    for (const auto& n : Json::parse(out.str())["nodes"]) EXPECT_NE(n["type"], "signal");
}

// ---------------------------------------------------------------------------
// render

TEST(CliRender, FrameCount)
{
    EXPECT_EQ(frame_count(5500, 1, 2), 11u);
    EXPECT_EQ(frame_count(5500, 1, 30), 165u);
    EXPECT_EQ(frame_count(5500, 2, 3), 33u);
    EXPECT_EQ(frame_count(1000, 1, 3), 3u);
    EXPECT_EQ(frame_count(1000, 1, 7), 7u);
    EXPECT_EQ(frame_count(0, 3, 30), 1u);
}

TEST(CliRender, WritesFramesManifestAndContactSheet)
{
    fs::path dir = scratch("render");
    RenderOptions opt{common("gapminder.json"), {}};
    opt.config.fps = 2;
    opt.config.out_dir = dir;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_render(opt, out, err), kExitOk);
    EXPECT_TRUE(fs::exists(dir / "frame_0000.svg"));
    EXPECT_TRUE(fs::exists(dir / "frame_0010.svg"));
    EXPECT_FALSE(fs::exists(dir / "frame_0011.svg"));
    EXPECT_NE(read_file(dir / "index.html").find("frame_0010.svg"), std::string::npos);
    std::string manifest = read_file(dir / "manifest.txt");
    EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 11);
    EXPECT_EQ(read_file(dir / "frame_0000.svg"), read_file(golden("gapminder_frame_0000.svg")));
}

TEST(CliRender, FrameDocFormat)
{
    fs::path dir = scratch("framedoc");
    RenderOptions opt{common("gapminder.json"), {}};
    opt.config.fps = 1;
    opt.config.out_dir = dir;
    opt.config.format = FrameFormat::FrameDoc;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_render(opt, out, err), kExitOk);
    Json j = Json::parse(read_file(dir / "frame_0001.json"));
    EXPECT_EQ(j["anim_value"], 1965);
    EXPECT_FALSE(fs::exists(dir / "index.html"));
}

TEST(CliRender, SecondCycleRepeatsFirst)
{
    auto frames = render("gapminder.json", 2, 2);
    ASSERT_EQ(frames.size(), 22u);
    for (std::size_t i = 0; i < 11; ++i) EXPECT_EQ(frames[i], frames[i + 11]) << i;
}

TEST(CliRender, StepAlignedFramesAreKeyframes)
{
    auto frames = render("gapminder.json", 2, 1);
    Program p = build_program(load_document(corpus("gapminder.json")));
    RuntimeState st = p.start();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        double year = 1955 + 5.0 * static_cast<double>(i);
        RenderedTable pure{st.data->empty_like(), {}};
        for (std::size_t r = 0; r < st.data->size(); ++r) {
            if (st.data->at(r, "year").as_number() == year) {
                pure.table.add_row(st.data->rows()[r]);
                pure.meta.push_back({r});
            }
        }
        EXPECT_EQ(frames[i], render_svg(encode_frame(st, pure))) << year;
        advance(st, 500);
    }
}

TEST(CliRender, RejectsBadConfig)
{
    RenderOptions opt{common("gapminder.json"), {}};
    opt.config.fps = 0;
    std::ostringstream out, err;
    EXPECT_EQ(cmd_render(opt, out, err), kExitSpec);
}

// ---------------------------------------------------------------------------
// trace

TEST(CliTrace, ScrubEqualsRenderedFrame)
{
    fs::path dir = scratch("trace");
    write_file(dir / "t.ndjson",
               R"({"t_offset_ms": 0, "event": {"type": "widget_set", "id": "slider:current_frame", "value": 1995}})"
               "\n");
    TraceOptions opt{common("gapminder_slider.json"), dir / "t.ndjson", dir / "out", FrameFormat::Svg};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_trace(opt, out, err), kExitOk);
    auto frames = render("gapminder_slider.json", 2, 1);
    EXPECT_EQ(read_file(dir / "out" / "frame_0000.svg"), frames.at(8));
    EXPECT_EQ(read_file(dir / "out" / "frame_0001.svg"), frames.at(8));
    EXPECT_FALSE(fs::exists(dir / "out" / "frame_0002.svg"));
}

TEST(CliTrace, EmptyTraceGivesInitFrame)
{
    fs::path dir = scratch("trace_empty");
    write_file(dir / "t.ndjson", "");
    TraceOptions opt{common("gapminder.json"), dir / "t.ndjson", dir / "out", FrameFormat::Svg};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_trace(opt, out, err), kExitOk);
    EXPECT_EQ(read_file(dir / "out" / "frame_0000.svg"), render("gapminder.json", 2, 1).at(0));
    EXPECT_FALSE(fs::exists(dir / "out" / "frame_0001.svg"));
}

TEST(CliTrace, ShiftClickSelectsBoth)
{
    Program p = build_program(load_document(corpus("migration.json")));
    RuntimeState st = p.start();
    advance(st, 1000);
    Scenegraph sg = encode_frame(st);
    std::map<std::string, const MarkItem*> by_bird;
    for (const auto& it : sg.items) by_bird.emplace(it.tooltip, &it);
    ASSERT_GE(by_bird.size(), 2u);
    auto a = by_bird.begin()->second;
    auto b = std::next(by_bird.begin())->second;

    fs::path dir = scratch("trace_click");
    auto click = [](const MarkItem* it, bool shift) {
        Json e = {{"type", "click"}, {"x", it->x}, {"y", it->y}};
        if (shift) e["modifiers"] = {"shift"};
        return e;
    };
    std::string text = Json{{"t_offset_ms", 1000}, {"event", click(a, false)}}.dump() + "\n"
                       + Json{{"t_offset_ms", 1000}, {"event", click(b, true)}}.dump() + "\n";
    write_file(dir / "t.ndjson", text);
    TraceOptions opt{common("migration.json"), dir / "t.ndjson", dir / "out", FrameFormat::FrameDoc};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_trace(opt, out, err), kExitOk) << err.str();
    Json last = Json::parse(read_file(dir / "out" / "frame_0002.json"));
    EXPECT_EQ(last["selections"]["highlight"].size(), 2u);
}

TEST(CliTrace, BadTraceIsSpecError)
{
    fs::path dir = scratch("trace_bad");
    write_file(dir / "t.ndjson", "{\"t_offset_ms\": 0, \"event\": {\"type\": \"warp\"}}\n");
    TraceOptions opt{common("gapminder.json"), dir / "t.ndjson", dir / "out", FrameFormat::Svg};
    std::ostringstream out, err;
    EXPECT_EQ(cmd_trace(opt, out, err), kExitSpec);
    EXPECT_NE(err.str().find("/0/event/type"), std::string::npos);
}

// ---------------------------------------------------------------------------
// service

TEST(Service, CreateReportsWidgets)
{
    SessionService svc({0, std::nullopt, std::nullopt, ANIMFLOW_CORPUS});
    Reply r = svc.create({{"spec", spec_json("gapminder_slider.json")}});
    ASSERT_EQ(r.status, 201) << r.body.dump();
    EXPECT_EQ(r.body["session_id"], "s1");
    EXPECT_EQ(r.body["cycle_ms"], 5500);
    ASSERT_EQ(r.body["widgets"].size(), 2u);
    EXPECT_EQ(r.body["widgets"][0]["kind"], "range-slider");
    EXPECT_EQ(r.body["widgets"][1]["kind"], "checkbox");
    EXPECT_EQ(svc.create({{"spec", spec_json("gapminder.json")}}).body["session_id"], "s2");
}

TEST(Service, InlineRecordsAsData)
{
    SessionService svc({0, std::nullopt, std::nullopt, "."});
    Json spec = {{"data", {{"url", "ignored.csv"}}},
                 {"mark", "circle"},
                 {"encoding", {{"x", {{"field", "v"}}}, {"time", {{"field", "t"}}}}}};
    Json data = Json::array({{{"t", 1}, {"v", 10}}, {{"t", 2}, {"v", 20}}});
    Reply r = svc.create({{"spec", spec}, {"data", data}});
    ASSERT_EQ(r.status, 201) << r.body.dump();
    EXPECT_EQ(r.body["cycle_ms"], 1000);
}

TEST(Service, ScrubThenFrameReflectsIt)
{
    SessionService svc({0, std::nullopt, std::nullopt, ANIMFLOW_CORPUS});
    std::string id = svc.create({{"spec", spec_json("gapminder_slider.json")}}).body["session_id"];
    Json ev = {{"type", "widget_set"}, {"id", "slider:current_frame"}, {"value", 1995}};
    Reply r = svc.event(id, {{"event", ev}, {"seq", 7}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body["seq"], 7);
    Json frame = svc.frame(id).body["frame"];
    EXPECT_EQ(frame["anim_value"], 1995);
    EXPECT_EQ(frame, r.body["frame"]);
    EXPECT_EQ(frame["widgets"][1]["value"], false);

    RuntimeState st = build_program(load_document(corpus("gapminder_slider.json"))).start();
    advance(st, 4000);
    Json expect = frame_to_json(encode_frame(st));
    EXPECT_EQ(frame["items"], expect["items"]);
}

TEST(Service, AdvanceAndTickRespectPlayState)
{
    SessionService svc({0, std::nullopt, std::nullopt, ANIMFLOW_CORPUS});
    std::string id = svc.create({{"spec", spec_json("gapminder_slider.json")}}).body["session_id"];
    EXPECT_EQ(svc.advance_session(id, {{"dt_ms", 500}}).body["frame"]["anim_value"], 1960);
    svc.tick(500);
    EXPECT_EQ(svc.frame(id).body["frame"]["anim_value"], 1965);
    svc.event(id, {{"event", {{"type", "widget_set"}, {"id", "checkbox:is_playing"}, {"value", false}}}});
    svc.tick(500);
    EXPECT_EQ(svc.frame(id).body["frame"]["anim_value"], 1965);
    svc.event(id, {{"event", {{"type", "widget_set"}, {"id", "checkbox:is_playing"}, {"value", true}}}});
    svc.tick(500);
    EXPECT_EQ(svc.frame(id).body["frame"]["anim_value"], 1970);
}

TEST(Service, Errors)
{
    SessionService svc({0, std::nullopt, std::nullopt, ANIMFLOW_CORPUS});
    Reply bad = svc.create({{"spec", {{"data", {{"values", Json::array()}}}, {"mark", "blob"}}}});
    EXPECT_EQ(bad.status, 400);
    EXPECT_EQ(bad.body["diagnostics"][0]["path"], "/mark");
    EXPECT_EQ(svc.create(Json::object()).status, 400);
    EXPECT_EQ(svc.frame("s99").status, 404);

    std::string id = svc.create({{"spec", spec_json("gapminder.json")}}).body["session_id"];
    EXPECT_EQ(svc.event(id, {{"event", {{"type", "widget_set"}, {"id", "nope"}, {"value", 1}}}}).status, 400);
    EXPECT_EQ(svc.event(id, {{"nothing", 1}}).status, 400);
    EXPECT_EQ(svc.advance_session(id, {{"dt_ms", -5}}).status, 400);
    EXPECT_EQ(svc.remove(id).status, 200);
    EXPECT_EQ(svc.remove(id).status, 404);
    EXPECT_EQ(svc.session_count(), 0u);
}

TEST(Service, SessionsAreIndependent)
{
    SessionService svc({0, std::nullopt, std::nullopt, ANIMFLOW_CORPUS});
    std::string a = svc.create({{"spec", spec_json("gapminder.json")}}).body["session_id"];
    std::string b = svc.create({{"spec", spec_json("gapminder.json")}}).body["session_id"];
    svc.advance_session(a, {{"dt_ms", 1000}});
    EXPECT_EQ(svc.frame(a).body["frame"]["anim_value"], 1965);
    EXPECT_EQ(svc.frame(b).body["frame"]["anim_value"], 1955);
}

TEST(Service, HttpRoundTrip)
{
    SessionService svc({0, std::nullopt, std::nullopt, ANIMFLOW_CORPUS});
    httplib::Server server;
    svc.mount(server);
    int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto created = client.Post("/sessions", Json{{"spec", spec_json("gapminder_slider.json")}}.dump(),
                               "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);
    std::string id = Json::parse(created->body)["session_id"];

    auto ev = client.Post("/sessions/" + id + "/events",
                          Json{{"event", {{"type", "widget_set"}, {"id", "slider:current_frame"}, {"value", 1995}}}}.dump(),
                          "application/json");
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->status, 200);
    auto frame = client.Get("/sessions/" + id + "/frame");
    ASSERT_TRUE(frame);
    EXPECT_EQ(Json::parse(frame->body)["frame"]["anim_value"], 1995);

    auto adv = client.Post("/sessions/" + id + "/advance", R"({"dt_ms": 100})", "application/json");
    ASSERT_TRUE(adv);
    EXPECT_EQ(adv->status, 200);

    auto garbage = client.Post("/sessions", "{not json", "application/json");
    ASSERT_TRUE(garbage);
    EXPECT_EQ(garbage->status, 400);

    auto del = client.Delete("/sessions/" + id);
    ASSERT_TRUE(del);
    EXPECT_EQ(del->status, 200);
    auto gone = client.Get("/sessions/" + id + "/frame");
    ASSERT_TRUE(gone);
    EXPECT_EQ(gone->status, 404);

    server.stop();
    th.join();
}

TEST(Service, AutoplayAdvancesWhilePlaying)
{
    SessionService svc({5, std::nullopt, std::nullopt, ANIMFLOW_CORPUS});
    std::string id = svc.create({{"spec", spec_json("gapminder_slider.json")}}).body["session_id"];
    svc.event(id, {{"event", {{"type", "widget_set"}, {"id", "slider:current_frame"}, {"value", 1975}}}});
    svc.start_autoplay();
    std::this_thread::sleep_for(std::chrono::milliseconds(60));
    EXPECT_EQ(svc.frame(id).body["frame"]["anim_value"], 1975);
    svc.event(id, {{"event", {{"type", "widget_set"}, {"id", "checkbox:is_playing"}, {"value", true}}}});
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (svc.frame(id).body["frame"]["anim_value"] == 1975 && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    svc.stop_autoplay();
    EXPECT_NE(svc.frame(id).body["frame"]["anim_value"], 1975);
}

TEST(Service, PortFromEnvironment)
{
    ::setenv("ANIMFLOW_PORT", "9123", 1);
    EXPECT_EQ(port_from_env(7878), 9123);
    ::setenv("ANIMFLOW_PORT", "junk", 1);
    EXPECT_EQ(port_from_env(7878), 7878);
    ::unsetenv("ANIMFLOW_PORT");
    EXPECT_EQ(port_from_env(7878), 7878);
}
