#include "qsuggest/http_server.hpp"

#include <charconv>
#include <iostream>

#include "httplib.h"
#include "qsuggest/errors.hpp"

namespace qsuggest::app {
namespace {

int status_for(const Error& e) {
  const auto& cls = e.error_class();
  if (cls == "not_found") return 404;
  if (cls == "contract_violation" || cls == "format_error") return 400;
  return 502;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(io::dump_compact(body), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view cls, std::string_view message) {
  send_json(res, status, {{"error", cls}, {"message", message}});
}

// Empty -> nullopt; non-integers throw ContractViolation.
std::optional<int> parse_k(const httplib::Request& req) {
  if (!req.has_param("k")) return std::nullopt;
  const auto raw = req.get_param_value("k");
  int k = 0;
  auto [end, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), k);
  if (ec != std::errc() || end != raw.data() + raw.size()) {
    throw ContractViolation("k must be an integer, got '" + raw + "'");
  }
  return k;
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, status_for(e), e.error_class(), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

}  // namespace

std::string sse_event(std::string_view name, std::string_view payload) {
  std::string out = "event: " + std::string(name) + "\n";
  std::size_t pos = 0;
  while (true) {
    auto nl = payload.find('\n', pos);
    out += "data: " + std::string(payload.substr(pos, nl == std::string_view::npos ? nl : nl - pos)) + "\n";
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out + "\n";
}

HttpServer::HttpServer(SuggestionService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  srv.Get("/products", [this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& p : service_.products()) {
      list.push_back({{"asin", p.asin}, {"title", p.title}, {"context_count", p.context_count}});
    }
    send_json(res, 200, {{"products", list}});
  });

  srv.Get(R"(/products/([^/]+)/suggestions)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string asin = req.matches[1];
      if (!service_.has_product(asin)) throw NotFoundError("unknown asin " + asin);
      send_json(res, 200, to_json(service_.suggestions(asin, parse_k(req))));
    });
  });

  srv.Post("/chat", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) throw ContractViolation("body must be a JSON object");
      if (!body.contains("asin") || !body["asin"].is_string()) throw ContractViolation("asin is required");
      const auto asin = body["asin"].get<std::string>();
      if (body.contains("suggestion_ref") && body["suggestion_ref"].is_string()) {
        send_json(res, 200, to_json(service_.chat_by_ref(asin, body["suggestion_ref"].get<std::string>())));
      } else if (body.contains("question") && body["question"].is_string()) {
        send_json(res, 200, to_json(service_.chat_free_text(asin, body["question"].get<std::string>())));
      } else {
        throw ContractViolation("either suggestion_ref or question is required");
      }
    });
  });

  srv.Get("/suggestions/stream", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto asin = req.get_param_value("asin");
      if (asin.empty()) throw ContractViolation("asin is required");
      if (!service_.has_product(asin)) throw NotFoundError("unknown asin " + asin);
      const auto k = parse_k(req);
      if (k && (*k < 1 || *k > 10)) throw ContractViolation("k must be in [1, 10]");
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this, asin, k](std::size_t, httplib::DataSink& sink) {
        struct ClientGone {};
        auto write = [&](const std::string& event) {
          if (!sink.write(event.data(), event.size())) throw ClientGone{};
        };
        try {
          auto bundle = service_.stream_suggestions(asin, k, [&](const std::string& context_id, std::string_view chunk) {
            write(sse_event("token", io::dump_compact({{"text", chunk}, {"context_id", context_id}})));
          });
          write(sse_event("bundle", io::dump_compact(to_json(bundle))));
        } catch (const ClientGone&) {
          return false;
        } catch (const Error& e) {
          try {
            write(sse_event("error", io::dump_compact({{"error", e.error_class()}, {"message", e.what()}})));
          } catch (const ClientGone&) {
            return false;
          }
        } catch (const std::exception& e) {
          try {
            write(sse_event("error", io::dump_compact({{"error", "internal"}, {"message", e.what()}})));
          } catch (const ClientGone&) {
            return false;
          }
        }
        sink.done();
        return true;
      });
    });
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    } catch (...) {
      send_error(res, 500, "internal", "unknown error");
    }
  });
}

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::serve() { server_->listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { serve(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace qsuggest::app
