#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/config.hpp"
#include "qsuggest/jsonl.hpp"
#include "qsuggest/single_flight.hpp"

namespace qsuggest::backend {

struct GenRequest {
  std::string prompt;
  std::string model_id;
  double temperature = 0.7;
  int max_tokens = 512;
  std::vector<std::string> stop_sequences;

  void validate() const;

  // Key-sorted JSON; the basis of the cache key.
  std::string canonical() const;
};

struct CacheKey {
  std::string digest;  // 64 hex chars

  static CacheKey of(const GenRequest& request);
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

struct Completion {
  std::string text;
  std::string model_id;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
  std::size_t token_count = 0;
};

using ChunkSink = std::function<void(std::string_view)>;

// SHA-256 hex of the prompt text; the key space of mock scripts.
std::string prompt_digest(std::string_view prompt);

class Backend {
 public:
  virtual ~Backend() = default;

  virtual Completion complete(const GenRequest& request) = 0;

  // Delivers the text through `sink` in order and returns the full completion.
  // Throws PartialStreamError if the stream breaks after the first chunk.
  virtual Completion complete_stream(const GenRequest& request, const ChunkSink& sink) = 0;

  virtual std::string_view kind() const = 0;
};

// Produces a response for prompts that have no scripted entry.
using Responder = std::function<std::optional<std::string>(const GenRequest&)>;

struct MockOptions {
  std::map<std::string, std::string> script;  // prompt digest -> text
  std::string default_text;
  Responder responder;
  std::size_t chunk_size = 16;
  // Streams stop with PartialStreamError after this many chunks (-1: never).
  int fail_after_chunks = -1;
  // Simulated generation time; reported latency stays 0.
  std::chrono::milliseconds delay{0};
};

// Deterministic stand-in for a remote model. Read-only after construction
// apart from the call counter.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockOptions options);

  Completion complete(const GenRequest& request) override;
  Completion complete_stream(const GenRequest& request, const ChunkSink& sink) override;
  std::string_view kind() const override { return "mock"; }

  std::size_t invocation_count() const { return calls_.load(); }
  std::string response_for(const GenRequest& request) const;

 private:
  MockOptions options_;
  std::atomic<std::size_t> calls_{0};
};

std::shared_ptr<MockBackend> mock_backend(std::map<std::string, std::string> script,
                                          std::string default_text);

// Blocks callers so that dispatches happen at most `rate` per second, spaced
// evenly (bucket capacity one). rate <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double rate_per_second);

  void acquire();
  double rate() const { return rate_; }

  // One limiter per endpoint, shared by every caller in the process.
  static std::shared_ptr<RateLimiter> for_endpoint(const std::string& endpoint, double rate);

 private:
  double rate_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_slot_;
};

struct CachedResponse {
  std::string text;
  json meta;
};

// Content-addressed store: <dir>/<digest>.txt holds the raw response bytes and
// <dir>/<digest>.meta.json a metadata sidecar. Files are written to a temp
// name and renamed. Without a directory the store is in-memory only.
class ResponseCache {
 public:
  explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt);

  std::optional<CachedResponse> get(const CacheKey& key) const;
  void put(const CacheKey& key, const GenRequest& request, const Completion& completion);

  const std::optional<std::filesystem::path>& dir() const { return dir_; }
  std::filesystem::path text_path(const CacheKey& key) const;
  std::filesystem::path meta_path(const CacheKey& key) const;

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, CachedResponse> memory_;
};

struct GeneratorOptions {
  std::optional<std::filesystem::path> cache_dir;
  double rate_limit = 0;  // requests per second, 0 = unlimited
  std::string endpoint = "local";
  std::size_t chunk_size = 16;  // cache-hit replay chunking
};

// Cache-first generation over a backend: lookups, rate limiting, single-flight
// coalescing of identical concurrent misses, and streaming replay of hits.
class Generator {
 public:
  Generator(std::shared_ptr<Backend> backend, GeneratorOptions options = {});

  Completion generate(const GenRequest& request);
  Completion generate_stream(const GenRequest& request, const ChunkSink& sink);

  // Requests that reached the backend.
  std::size_t backend_calls() const { return backend_calls_.load(); }
  Backend& backend() { return *backend_; }
  ResponseCache& cache() { return cache_; }

 private:
  Completion call_backend(const GenRequest& request, const ChunkSink* sink);

  std::shared_ptr<Backend> backend_;
  GeneratorOptions options_;
  ResponseCache cache_;
  std::shared_ptr<RateLimiter> limiter_;
  SingleFlight<std::string, Completion> flights_;
  std::atomic<std::size_t> backend_calls_{0};
};

enum class BackendKind { openai_compat, anthropic_compat, mock };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string endpoint;
  std::string model_id = "mock-model";
  std::string auth_env;
  double rate_limit = 0;
  std::optional<std::filesystem::path> cache_dir;
  double temperature = 0.7;
  int max_tokens = 512;
  std::size_t chunk_size = 16;
  int timeout_seconds = 60;
  std::string anthropic_version = "2023-06-01";

  // [mock] section
  std::string mock_mode = "synthetic";  // synthetic | script
  std::optional<std::filesystem::path> mock_script;
  std::string mock_default = "";
  std::uint64_t mock_seed = 0;
  int mock_fail_after_chunks = -1;
  int mock_delay_ms = 0;

  static BackendConfig from_document(const config::Document& doc);
  static BackendConfig load(const std::filesystem::path& path);
};

// Builds the configured backend (remote adapters read the auth token from the
// environment variable named in the config).
std::shared_ptr<Backend> make_backend(const BackendConfig& config);
std::unique_ptr<Generator> make_generator(const BackendConfig& config);

// Mock script file: JSON object mapping prompt digests to response text.
std::map<std::string, std::string> load_script(const std::filesystem::path& path);

}  // namespace qsuggest::backend
