#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "qsuggest/backend.hpp"

namespace qsuggest::backend {

enum class WireShape { openai_chat, anthropic_messages };

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  // Injected in tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct RemoteOptions {
  WireShape shape = WireShape::openai_chat;
  // Base URL including any path prefix, e.g. "https://api.openai.com/v1".
  // Requests go to <base>/chat/completions or <base>/messages.
  std::string endpoint;
  std::string api_key;
  int timeout_seconds = 60;
  std::string anthropic_version = "2023-06-01";
  RetryPolicy retry;
};

// Completion client over HTTP. Connection failures, 429 and 5xx are retried
// with exponential backoff; other 4xx fail immediately with RequestError.
// Streams are retried only while no chunk has been delivered.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteOptions options);

  Completion complete(const GenRequest& request) override;
  Completion complete_stream(const GenRequest& request, const ChunkSink& sink) override;
  std::string_view kind() const override;

  // Exposed for tests of the two wire shapes.
  json build_body(const GenRequest& request, bool stream) const;
  std::string parse_body(const std::string& body) const;

 private:
  struct Attempt;
  Completion run(const GenRequest& request, const ChunkSink* sink);

  RemoteOptions options_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace qsuggest::backend
