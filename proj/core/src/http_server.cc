#include "kgcopy/http_server.h"

#include <stdexcept>

#include "httplib.h"
#include "json.hpp"

namespace kgcopy {
namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

void Fail(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}}.dump(), kJson);
}

std::optional<nlohmann::json> ParseBody(const httplib::Request& req, httplib::Response& res) {
  auto body = nlohmann::json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    Fail(res, 400, "request body must be a JSON object");
    return std::nullopt;
  }
  return body;
}

}  // namespace

struct HttpServer::Impl {
  std::shared_ptr<SessionManager> sessions;
  httplib::Server server;
};

HttpServer::HttpServer(std::shared_ptr<SessionManager> sessions)
    : impl_(std::make_unique<Impl>()) {
  if (!sessions) throw std::invalid_argument("null session manager");
  impl_->sessions = std::move(sessions);
  auto* sm = impl_->sessions.get();

  impl_->server.Get("/teams", [sm](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"teams", sm->engine().teams()}}.dump(), kJson);
  });

  impl_->server.Post("/sessions", [sm](const httplib::Request& req, httplib::Response& res) {
    auto body = ParseBody(req, res);
    if (!body) return;
    auto team = body->find("team");
    if (team == body->end() || !team->is_string()) return Fail(res, 400, "missing team");
    try {
      std::string id = sm->Create(team->get<std::string>());
      res.set_content(
          nlohmann::json{{"session_id", id}, {"teams", sm->engine().teams()}}.dump(), kJson);
    } catch (const UnknownTeamError& e) {
      Fail(res, 400, e.what());
    }
  });

  impl_->server.Post(R"(/sessions/([^/]+)/messages)",
                     [sm](const httplib::Request& req, httplib::Response& res) {
                       auto body = ParseBody(req, res);
                       if (!body) return;
                       auto text = body->find("text");
                       if (text == body->end() || !text->is_string()) {
                         return Fail(res, 400, "missing text");
                       }
                       try {
                         ChatResponse r = sm->Send(req.matches[1], text->get<std::string>());
                         res.set_content(ChatResponseToJson(r), kJson);
                       } catch (const std::out_of_range& e) {
                         Fail(res, 404, e.what());
                       } catch (const std::invalid_argument& e) {
                         Fail(res, 400, e.what());
                       }
                     });
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::Listen() { impl_->server.listen_after_bind(); }

void HttpServer::Stop() {
  if (impl_) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace kgcopy
