#include "lattice/server.hpp"

#include "httplib.h"
#include "lattice/errors.hpp"

namespace lattice {

using nlohmann::json;

struct HttpServer::Impl {
  explicit Impl(SessionService& s) : service(s) {}

  SessionService& service;
  httplib::Server http;
};

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Maps library errors onto HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFoundError& e) {
    send(res, 404, {{"error", e.what()}});
  } catch (const StateError& e) {
    send(res, 409, {{"error", e.what()}});
  } catch (const ValidationError& e) {
    send(res, 400, {{"error", e.what()}});
  } catch (const ParseError& e) {
    send(res, 400, {{"error", e.what()}});
  } catch (const json::exception& e) {
    send(res, 400, {{"error", std::string("malformed request body: ") + e.what()}});
  } catch (const std::exception& e) {
    send(res, 500, {{"error", e.what()}});
  }
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) {
    return json::object();
  }
  auto doc = json::parse(req.body);
  if (!doc.is_object()) {
    throw ValidationError("request body must be a JSON object");
  }
  return doc;
}

std::string answer_text(const json& body) {
  if (!body.contains("answer") || body.at("answer").is_null()) {
    throw ValidationError("blank answers are not accepted");
  }
  const auto& a = body.at("answer");
  if (a.is_string()) {
    return a.get<std::string>();
  }
  if (a.is_number()) {
    return a.dump();
  }
  throw ValidationError("answer must be a number or numeric text");
}

}  // namespace

HttpServer::HttpServer(SessionService& service, std::string static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& http = impl_->http;
  auto& svc = impl_->service;

  http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                            {"Access-Control-Allow-Headers", "Content-Type"}});
  http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });

  http.Get("/api/tests", [&svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json tests = json::array();
      for (const auto& id : svc.test_ids()) {
        tests.push_back({{"id", id}, {"total", svc.test_config(id).total_questions()}});
      }
      send(res, 200, {{"tests", tests}});
    });
  });

  http.Post("/api/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = body_of(req);
      const auto student = body.value("student_key", std::string{});
      std::string id;
      if (body.contains("test")) {
        id = svc.create(body.at("test").get<std::string>(), student);
      } else if (body.contains("config") && body.contains("bank")) {
        id = svc.create(body.at("config").get<std::string>(), body.at("bank").get<std::string>(),
                        student);
      } else {
        throw ValidationError("request needs 'test' or both 'config' and 'bank'");
      }
      const auto s = svc.snapshot(id);
      send(res, 201, {{"session_id", id}, {"total", s.total()}});
    });
  });

  http.Get(R"(/api/sessions/([^/]+)/item)",
           [&svc](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const auto view = svc.current_item(req.matches[1]);
               send(res, 200,
                    {{"prompt", view.prompt},
                     {"answered", view.answered},
                     {"total", view.total},
                     {"n_choices", view.n_choices}});
             });
           });

  http.Post(R"(/api/sessions/([^/]+)/answer)",
            [&svc](const httplib::Request& req, httplib::Response& res) {
              guarded(res, [&] {
                const auto body = body_of(req);
                std::optional<int> expected;
                if (body.contains("expected_answered") && !body.at("expected_answered").is_null()) {
                  expected = body.at("expected_answered").get<int>();
                }
                const auto out = svc.submit(req.matches[1], answer_text(body), expected);
                send(res, 200,
                     {{"accepted", out.accepted},
                      {"finished", out.finished},
                      {"answered", out.answered},
                      {"total", out.total}});
              });
            });

  http.Get(R"(/api/sessions/([^/]+)/result)",
           [&svc](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] { send(res, 200, to_json(svc.result(req.matches[1]))); });
           });

  if (!static_dir.empty()) {
    http.set_mount_point("/", static_dir);
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind to " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port)) {
    throw Error("cannot bind to " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::serve() { impl_->http.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->http.is_running()) {
    impl_->http.stop();
  }
}

}  // namespace lattice
