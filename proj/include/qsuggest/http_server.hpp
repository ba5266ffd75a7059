#pragma once

#include <memory>
#include <string>
#include <thread>

#include "qsuggest/service.hpp"

namespace httplib {
class Server;
}

namespace qsuggest::app {

// JSON-over-HTTP front end for a SuggestionService:
//   GET  /health
//   GET  /products
//   GET  /products/{asin}/suggestions?k=N
//   POST /chat                  {asin, suggestion_ref | question}
//   GET  /suggestions/stream?asin=...&k=...   (text/event-stream)
// Errors carry {"error": <class>, "message": ...}: 400 for bad input, 404 for
// unknown products or refs, 502 when the backend fails.
class HttpServer {
 public:
  explicit HttpServer(SuggestionService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the port (an ephemeral one when port is 0).
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void serve();
  // bind + serve on a background thread; returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

 private:
  void routes();

  SuggestionService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

// "event: <name>\ndata: <payload>\n\n"; multi-line payloads become several data lines.
std::string sse_event(std::string_view name, std::string_view payload);

}  // namespace qsuggest::app
