#include "qsuggest/remote_backend.hpp"

#include <thread>

#include "httplib.h"
#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::backend {
namespace {

using Clock = std::chrono::steady_clock;

// Incremental server-sent-events decoder. Calls on_event(event, data) for every
// complete event.
class SseDecoder {
 public:
  explicit SseDecoder(std::function<void(const std::string&, const std::string&)> on_event)
      : on_event_(std::move(on_event)) {}

  void feed(std::string_view bytes) {
    buffer_.append(bytes);
    std::size_t pos;
    while ((pos = buffer_.find('\n')) != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      handle_line(line);
    }
  }

  void finish() {
    if (!buffer_.empty()) {
      handle_line(buffer_);
      buffer_.clear();
    }
    handle_line("");
  }

 private:
  void handle_line(const std::string& line) {
    if (line.empty()) {
      if (has_data_) on_event_(event_, data_);
      event_.clear();
      data_.clear();
      has_data_ = false;
      return;
    }
    if (line.front() == ':') return;
    auto colon = line.find(':');
    std::string field = line.substr(0, colon);
    std::string value = colon == std::string::npos ? "" : line.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.erase(0, 1);
    if (field == "event") {
      event_ = value;
    } else if (field == "data") {
      if (has_data_) data_.push_back('\n');
      data_ += value;
      has_data_ = true;
    }
  }

  std::function<void(const std::string&, const std::string&)> on_event_;
  std::string buffer_;
  std::string event_;
  std::string data_;
  bool has_data_ = false;
};

std::string http_detail(int status, const std::string& body) {
  std::string snippet = body.substr(0, text::utf8_floor(body, 200));
  return "HTTP " + std::to_string(status) + (snippet.empty() ? "" : ": " + snippet);
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
  const auto& url = options_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an absolute URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + (options_.shape == WireShape::openai_chat ? "/chat/completions" : "/messages");
  if (options_.retry.max_attempts < 1) throw ConfigError("retry attempts must be at least 1");
  if (!options_.retry.sleep) {
    options_.retry.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::string_view RemoteBackend::kind() const {
  return options_.shape == WireShape::openai_chat ? "openai_compat" : "anthropic_compat";
}

json RemoteBackend::build_body(const GenRequest& request, bool stream) const {
  json messages = json::array({{{"role", "user"}, {"content", request.prompt}}});
  json body = {{"model", request.model_id},
               {"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  if (!request.stop_sequences.empty()) {
    body[options_.shape == WireShape::openai_chat ? "stop" : "stop_sequences"] = request.stop_sequences;
  }
  if (stream) body["stream"] = true;
  return body;
}

std::string RemoteBackend::parse_body(const std::string& body) const {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw MalformedResponseError("response is not a JSON object");
  if (options_.shape == WireShape::openai_chat) {
    auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) {
      throw MalformedResponseError("response has no choices");
    }
    const auto& message = (*choices)[0].value("message", json::object());
    auto content = message.find("content");
    if (content == message.end() || !content->is_string()) {
      throw MalformedResponseError("response choice has no text content");
    }
    return content->get<std::string>();
  }
  auto content = j.find("content");
  if (content == j.end() || !content->is_array()) throw MalformedResponseError("response has no content");
  std::string out;
  bool found = false;
  for (const auto& block : *content) {
    if (block.value("type", "") == "text" && block.contains("text") && block["text"].is_string()) {
      out += block["text"].get<std::string>();
      found = true;
    }
  }
  if (!found) throw MalformedResponseError("response has no text block");
  return out;
}

Completion RemoteBackend::complete(const GenRequest& request) { return run(request, nullptr); }

Completion RemoteBackend::complete_stream(const GenRequest& request, const ChunkSink& sink) {
  return run(request, &sink);
}

Completion RemoteBackend::run(const GenRequest& request, const ChunkSink* sink) {
  request.validate();

  httplib::Headers headers;
  if (options_.shape == WireShape::openai_chat) {
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
  } else {
    if (!options_.api_key.empty()) headers.emplace("x-api-key", options_.api_key);
    headers.emplace("anthropic-version", options_.anthropic_version);
  }
  const std::string payload = io::dump_compact(build_body(request, sink != nullptr));

  std::vector<std::string> attempt_log;
  auto backoff = options_.retry.initial_backoff;
  const auto started = Clock::now();

  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    const std::string tag = "attempt " + std::to_string(attempt) + ": ";
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    client.set_write_timeout(options_.timeout_seconds, 0);

    int status = 0;
    std::string raw;
    std::string streamed;
    std::vector<std::string> delivered;
    bool finished = false;

    SseDecoder decoder([&](const std::string& event, const std::string& data) {
      if (options_.shape == WireShape::openai_chat) {
        if (data == "[DONE]") {
          finished = true;
          return;
        }
        json j = json::parse(data, nullptr, false);
        if (j.is_discarded()) throw MalformedResponseError("unparsable stream event");
        if (j.contains("error")) throw MalformedResponseError("stream error event: " + data);
        const auto& choices = j.value("choices", json::array());
        if (choices.empty() || !choices[0].contains("delta")) return;
        const auto& delta = choices[0]["delta"];
        if (delta.contains("content") && delta["content"].is_string()) {
          auto piece = delta["content"].get<std::string>();
          if (piece.empty()) return;
          (*sink)(piece);
          streamed += piece;
          delivered.push_back(std::move(piece));
        }
        return;
      }
      json j = json::parse(data, nullptr, false);
      if (j.is_discarded()) throw MalformedResponseError("unparsable stream event");
      std::string type = j.value("type", event);
      if (type == "message_stop") {
        finished = true;
      } else if (type == "error") {
        throw MalformedResponseError("stream error event: " + data);
      } else if (type == "content_block_delta") {
        const auto& delta = j.value("delta", json::object());
        if (delta.contains("text") && delta["text"].is_string()) {
          auto piece = delta["text"].get<std::string>();
          if (piece.empty()) return;
          (*sink)(piece);
          streamed += piece;
          delivered.push_back(std::move(piece));
        }
      }
    });

    httplib::Request req;
    req.method = "POST";
    req.path = path_;
    req.headers = headers;
    req.body = payload;
    req.set_header("Content-Type", "application/json");
    if (sink) req.set_header("Accept", "text/event-stream");
    req.response_handler = [&](const httplib::Response& res) {
      status = res.status;
      return true;
    };
    std::exception_ptr stream_failure;
    req.content_receiver = [&](const char* data, std::size_t n, std::uint64_t, std::uint64_t) {
      if (sink && status >= 200 && status < 300) {
        // Exceptions must not unwind through the HTTP client; cancel instead.
        try {
          decoder.feed(std::string_view(data, n));
        } catch (...) {
          stream_failure = std::current_exception();
          return false;
        }
      } else {
        raw.append(data, n);
      }
      return true;
    };

    auto result = client.send(req);
    if (stream_failure) std::rethrow_exception(stream_failure);
    if (!result) {
      if (!delivered.empty()) {
        throw PartialStreamError("stream disconnected: " + httplib::to_string(result.error()),
                                 std::move(delivered));
      }
      attempt_log.push_back(tag + "connection error: " + httplib::to_string(result.error()));
    } else if (status == 429 || status >= 500) {
      attempt_log.push_back(tag + http_detail(status, raw));
    } else if (status < 200 || status >= 300) {
      throw RequestError(status, http_detail(status, raw));
    } else if (sink) {
      decoder.finish();
      if (finished) {
        Completion c;
        c.model_id = request.model_id;
        c.text = std::move(streamed);
        c.token_count = text::estimate_tokens(c.text.size());
        c.latency_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();
        return c;
      }
      if (!delivered.empty()) {
        throw PartialStreamError("stream ended without a terminal event", std::move(delivered));
      }
      attempt_log.push_back(tag + "stream ended before any content");
    } else {
      Completion c;
      c.model_id = request.model_id;
      c.text = parse_body(raw);
      c.token_count = text::estimate_tokens(c.text.size());
      c.latency_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();
      return c;
    }
    if (attempt < options_.retry.max_attempts) {
      options_.retry.sleep(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * options_.retry.multiplier));
    }
  }
  throw TransportError("request failed after " + std::to_string(options_.retry.max_attempts) +
                           " attempt(s): " + attempt_log.back(),
                       attempt_log);
}

}  // namespace qsuggest::backend
