#include "bayescloud/http_server.hpp"

#include <httplib.h>

#include "bayescloud/error.hpp"
#include "bayescloud/json_io.hpp"

namespace bayescloud {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::ZeroProbabilityEvidence: return 422;
        case ErrorCode::CycleInUnion: return 409;
        default: return 400;
    }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("request body is not valid JSON: ") + e.what());
    }
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const ScriptError& e) {
            auto body = e.to_json();
            body["details"]["line"] = e.line();
            body["details"]["column"] = e.column();
            send_json(res, http_status(e.code()), body);
        } catch (const Error& e) {
            send_json(res, http_status(e.code()), e.to_json());
        } catch (const std::exception& e) {
            send_json(res, 500, {{"code", "internal_error"}, {"message", e.what()}, {"details", json::object()}});
        }
    };
}

integration::MergeOptions merge_options(const json& j) {
    integration::MergeOptions o;
    if (j.is_null()) return o;
    if (!j.is_object()) throw Error(ErrorCode::InvalidRequest, "options must be an object");
    try {
        o.tolerance = j.value("tolerance", o.tolerance);
        o.max_iterations = j.value("max_iterations", o.max_iterations);
        o.sample_count = j.value("samples", o.sample_count);
        o.seed = j.value("seed", o.seed);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("bad merge options: ") + e.what());
    }
    return o;
}

}  // namespace

struct HttpService::Impl {
    registry::Registry& reg;
    httplib::Server server;

    explicit Impl(registry::Registry& r) : reg(r) {
        server.Post("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto id = reg.register_model(registry::NewModel::from_json(parse_body(req)));
                        send_json(res, 201, {{"id", id}});
                    }));
        server.Get("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       json out = json::array();
                       for (const auto& r : reg.search(req.get_param_value("q"))) out.push_back(r.summary_json());
                       send_json(res, 200, out);
                   }));
        server.Get(R"(/models/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 200, reg.get(req.matches[1]).to_json());
                   }));
        server.Put(R"(/models/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 200,
                                 reg.update(req.matches[1], registry::RecordUpdate::from_json(parse_body(req))).to_json());
                   }));
        server.Delete(R"(/models/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                          reg.remove(req.matches[1]);
                          res.status = 204;
                      }));
        server.Post(R"(/models/([^/]+)/infer)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        if (!body.is_object()) throw Error(ErrorCode::InvalidRequest, "request body must be a JSON object");
                        std::string evidence;
                        std::vector<std::string> query;
                        try {
                            evidence = body.value("evidence", "");
                            query = body.value("query", std::vector<std::string>{});
                        } catch (const json::exception& e) {
                            throw Error(ErrorCode::InvalidRequest, std::string("bad infer request: ") + e.what());
                        }
                        send_json(res, 200, marginals_to_json(reg.infer(req.matches[1], evidence, query)));
                    }));
        server.Post("/merge", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        if (!body.is_object() || !body.contains("id1") || !body.contains("id2") ||
                            !body["id1"].is_string() || !body["id2"].is_string()) {
                            throw Error(ErrorCode::InvalidRequest, "merge needs string fields id1 and id2");
                        }
                        const auto method = integration::parse_method(body.value("method", std::string("optimize")));
                        const auto outcome = reg.merge(body["id1"].get<std::string>(), body["id2"].get<std::string>(),
                                                       method, merge_options(body.value("options", json())));
                        send_json(res, 201, {{"id", outcome.id}, {"report", outcome.report.to_json()}});
                    }));
    }
};

HttpService::HttpService(registry::Registry& registry) : impl_(std::make_unique<Impl>(registry)) {}
HttpService::~HttpService() = default;

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::run() { return impl_->server.listen_after_bind(); }
void HttpService::stop() { impl_->server.stop(); }
void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace bayescloud
