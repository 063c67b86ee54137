#include "hrt/http.hpp"

#include <chrono>
#include <iostream>
#include <mutex>

#include <httplib.h>

namespace hrt {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    reply(res, {400, {{"error", std::string("invalid JSON: ") + e.what()}}});
    return std::nullopt;
  }
}

std::mutex log_mutex;
thread_local std::chrono::steady_clock::time_point request_start;

}  // namespace

HttpServer::HttpServer(CoordinationService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;

  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) reply(res, service_.create_session(*body));
  });
  srv.Get(R"(/sessions/([^/]+)/schedule)", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.get_schedule(req.matches[1]));
  });
  srv.Get(R"(/sessions/([^/]+)/agents)", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.get_agents(req.matches[1]));
  });
  srv.Post(R"(/sessions/([^/]+)/observations)", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    std::optional<std::string> key;
    if (req.has_header("Idempotency-Key")) key = req.get_header_value("Idempotency-Key");
    reply(res, service_.post_observations(req.matches[1], *body, key));
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, {500, {{"error", what}}});
  });

  srv.set_pre_routing_handler([](const httplib::Request&, httplib::Response&) {
    request_start = std::chrono::steady_clock::now();
    return httplib::Server::HandlerResponse::Unhandled;
  });
  srv.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - request_start).count();
    const json line = {{"method", req.method}, {"path", req.path}, {"status", res.status}, {"ms", ms}};
    std::lock_guard lock(log_mutex);
    std::cerr << line.dump() << std::endl;
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::serve() { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

}  // namespace hrt
