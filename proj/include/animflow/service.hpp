#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>

#include "animflow/commands.hpp"

namespace animflow {

struct ServiceOptions
{
    // Autoplay period in ms; 0 turns wall-clock playback off.
    double tick_ms = 16;
    // Spec used when POST /sessions carries none.
    std::optional<Json> default_spec;
    std::optional<DataTable> default_data;
    // Relative data urls resolve against this directory.
    std::filesystem::path base_dir = ".";
};

struct Reply
{
    int status = 200;
    Json body = Json::object();
};

// Session store behind the wire protocol. Handlers are plain functions of
// (path parameters, body) so they can be driven without a socket.
class SessionService
{
public:
    explicit SessionService(ServiceOptions opts = {}) : opts_(std::move(opts)) {}

    ~SessionService() { stop_autoplay(); }

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    Reply create(const Json& body)
    {
        return handle([&]() -> Reply {
            if (!body.is_object() && !body.is_null()) throw SchemaError("", "expected an object body");
            Json spec_json;
            if (body.is_object() && body.contains("spec")) spec_json = body["spec"];
            else if (opts_.default_spec) spec_json = *opts_.default_spec;
            else throw SchemaError("/spec", "missing spec");
            if (spec_json.is_string()) {
                std::string text = spec_json.get<std::string>();
                try {
                    spec_json = Json::parse(text);
                } catch (const Json::parse_error& e) {
                    throw SyntaxError("spec: invalid JSON", e.byte);
                }
            }
            std::vector<Diagnostic> warnings;
            Spec spec = parse_spec(spec_json, &warnings);
            DataTable data;
            if (spec.data.values) data = *spec.data.values;
            else if (body.is_object() && body.contains("data")) data = table_from_body(body["data"]);
            else if (!body.contains("spec") && opts_.default_data) data = *opts_.default_data;
            else data = resolve_data(spec, std::nullopt, opts_.base_dir);

            auto session = std::make_shared<Session>(build_program(spec, data));
            std::string id;
            {
                std::lock_guard lock(mu_);
                id = "s" + std::to_string(++next_id_);
                sessions_[id] = session;
            }
            Json widgets = Json::array();
            for (const auto& w : session->program.graph->widgets) widgets.push_back(widget_to_json(w));
            return {201,
                    {{"session_id", id},
                     {"widgets", std::move(widgets)},
                     {"cycle_ms", cycle_length(*session->program.graph)},
                     {"warnings", diagnostics_to_json(warnings)}}};
        });
    }

    Reply event(const std::string& id, const Json& body)
    {
        return with_session(id, [&](Session& s) -> Reply {
            if (!body.is_object() || !body.contains("event")) throw SchemaError("/event", "missing event");
            Event e = event_from_json(body["event"]);
            inject_event(s.state, e);
            Reply r{200, {{"frame", frame_to_json(encode_frame(s.state))}}};
            if (body.contains("seq")) r.body["seq"] = body["seq"];
            return r;
        });
    }

    Reply advance_session(const std::string& id, const Json& body)
    {
        return with_session(id, [&](Session& s) -> Reply {
            if (!body.is_object() || !body.contains("dt_ms") || !body["dt_ms"].is_number()) {
                throw SchemaError("/dt_ms", "expected a number");
            }
            double dt = body["dt_ms"];
            if (dt < 0) throw SchemaError("/dt_ms", "dt_ms must be non-negative");
            advance(s.state, dt);
            return {200, {{"frame", frame_to_json(encode_frame(s.state))}}};
        });
    }

    Reply frame(const std::string& id)
    {
        return with_session(id, [&](Session& s) -> Reply {
            return {200, {{"frame", frame_to_json(encode_frame(s.state))}}};
        });
    }

    Reply remove(const std::string& id)
    {
        std::lock_guard lock(mu_);
        if (!sessions_.erase(id)) return not_found(id);
        return {200, {{"deleted", id}}};
    }

    std::size_t session_count() const
    {
        std::lock_guard lock(mu_);
        return sessions_.size();
    }

    // Advances every session that is playing by dt. A session without a
    // play/pause signal is always playing.
    void tick(double dt)
    {
        std::vector<std::shared_ptr<Session>> all;
        {
            std::lock_guard lock(mu_);
            for (const auto& [_, s] : sessions_) all.push_back(s);
        }
        for (const auto& s : all) {
            std::lock_guard lock(s->mu);
            auto it = s->state.signals.find(kIsPlaying);
            if (it != s->state.signals.end() && !truthy(it->second)) continue;
            try {
                advance(s->state, dt);
            } catch (const std::exception&) {
                // A failing session stays frozen; its next request reports the error.
            }
        }
    }

    void start_autoplay()
    {
        if (opts_.tick_ms <= 0 || ticker_.joinable()) return;
        running_ = true;
        ticker_ = std::thread([this] {
            using clock = std::chrono::steady_clock;
            auto period = std::chrono::duration<double, std::milli>(opts_.tick_ms);
            auto last = clock::now();
            std::unique_lock lock(tick_mu_);
            while (running_) {
                tick_cv_.wait_for(lock, period, [this] { return !running_; });
                if (!running_) break;
                auto now = clock::now();
                double dt = std::chrono::duration<double, std::milli>(now - last).count();
                last = now;
                tick(dt);
            }
        });
    }

    void stop_autoplay()
    {
        {
            std::lock_guard lock(tick_mu_);
            running_ = false;
        }
        tick_cv_.notify_all();
        if (ticker_.joinable()) ticker_.join();
    }

    void mount(httplib::Server& server)
    {
        auto send = [](httplib::Response& res, const Reply& r) {
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        auto parse_body = [](const httplib::Request& req) -> std::optional<Json> {
            if (req.body.empty()) return Json();
            try {
                return Json::parse(req.body);
            } catch (const Json::parse_error&) {
                return std::nullopt;
            }
        };
        auto bad_json = [send](httplib::Response& res) {
            send(res, {400, {{"error", "request body is not valid JSON"}, {"diagnostics", Json::array()}}});
        };

        server.Post("/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
            auto body = parse_body(req);
            if (!body) return bad_json(res);
            send(res, create(*body));
        });
        server.Post(R"(/sessions/([^/]+)/events)", [=, this](const httplib::Request& req, httplib::Response& res) {
            auto body = parse_body(req);
            if (!body) return bad_json(res);
            send(res, event(req.matches[1], *body));
        });
        server.Post(R"(/sessions/([^/]+)/advance)", [=, this](const httplib::Request& req, httplib::Response& res) {
            auto body = parse_body(req);
            if (!body) return bad_json(res);
            send(res, advance_session(req.matches[1], *body));
        });
        server.Get(R"(/sessions/([^/]+)/frame)", [=, this](const httplib::Request& req, httplib::Response& res) {
            send(res, frame(req.matches[1]));
        });
        server.Delete(R"(/sessions/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
            send(res, remove(req.matches[1]));
        });
    }

private:
    struct Session
    {
        explicit Session(Program p) : program(std::move(p)), state(program.start()) {}

        std::mutex mu;
        Program program;
        RuntimeState state;
    };

    static DataTable table_from_body(const Json& data)
    {
        if (data.is_string()) return parse_csv(data.get<std::string>());
        if (data.is_object() && data.contains("values")) return detail::table_from_json_records(data["values"], "/data/values");
        return detail::table_from_json_records(data, "/data");
    }

    static Reply not_found(const std::string& id)
    {
        return {404, {{"error", "no session \"" + id + "\""}, {"diagnostics", Json::array()}}};
    }

    template <typename Body>
    static Reply handle(Body&& body)
    {
        try {
            return body();
        } catch (const std::exception& e) {
            auto [code, diags] = classify_error(e);
            int status = code == kExitInternal ? 500 : 400;
            if (dynamic_cast<const RuntimeError*>(&e)) status = 400;
            return {status, {{"error", diags.empty() ? e.what() : to_string(diags.front())},
                             {"diagnostics", diagnostics_to_json(diags)}}};
        }
    }

    template <typename Body>
    Reply with_session(const std::string& id, Body&& body)
    {
        std::shared_ptr<Session> s;
        {
            std::lock_guard lock(mu_);
            auto it = sessions_.find(id);
            if (it == sessions_.end()) return not_found(id);
            s = it->second;
        }
        std::lock_guard lock(s->mu);
        return handle([&] { return body(*s); });
    }

    ServiceOptions opts_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::size_t next_id_ = 0;

    std::thread ticker_;
    std::mutex tick_mu_;
    std::condition_variable tick_cv_;
    bool running_ = false;
};

struct ServeOptions
{
    std::optional<std::filesystem::path> spec;
    std::optional<std::filesystem::path> data;
    std::string host = "127.0.0.1";
    int port = 7878;
    double tick_ms = 16;
};

// Port from ANIMFLOW_PORT when set and valid, else `fallback`.
inline int port_from_env(int fallback)
{
    const char* v = std::getenv("ANIMFLOW_PORT");
    if (!v || !*v) return fallback;
    try {
        std::size_t used = 0;
        int p = std::stoi(v, &used);
        if (used == std::string_view(v).size() && p > 0 && p < 65536) return p;
    } catch (const std::exception&) {
    }
    return fallback;
}

inline int cmd_serve(const ServeOptions& opt, std::ostream& out, std::ostream& err)
{
    return guarded(err, DiagnosticFormat::Text, [&] {
        ServiceOptions sopts;
        sopts.tick_ms = opt.tick_ms;
        if (opt.spec) {
            std::string text = read_file(*opt.spec);
            try {
                sopts.default_spec = Json::parse(text);
            } catch (const Json::parse_error& e) {
                throw SyntaxError(opt.spec->string() + ": invalid JSON", e.byte);
            }
            sopts.base_dir = opt.spec->parent_path();
            Document doc = load_document(*opt.spec, opt.data);
            build_program(doc); // reject a bad default spec at startup
            sopts.default_data = *doc.data;
        }
        SessionService service(std::move(sopts));
        httplib::Server server;
        service.mount(server);
        if (!server.bind_to_port(opt.host, opt.port)) {
            throw IoError("cannot listen on " + opt.host + ":" + std::to_string(opt.port) + " (port in use?)");
        }
        out << "listening on http://" << opt.host << ":" << opt.port << "\n" << std::flush;
        service.start_autoplay();
        server.listen_after_bind();
        service.stop_autoplay();
        return kExitOk;
    });
}

} // namespace animflow
