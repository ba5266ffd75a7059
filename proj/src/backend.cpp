#include "qsuggest/backend.hpp"

#include <cstdlib>
#include <thread>

#include "qsuggest/errors.hpp"
#include "qsuggest/remote_backend.hpp"
#include "qsuggest/synthetic_responder.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::backend {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

}  // namespace

void GenRequest::validate() const {
  if (max_tokens < 1) throw ContractViolation("max_tokens must be at least 1");
  if (temperature < 0) throw ContractViolation("temperature must be non-negative");
}

std::string GenRequest::canonical() const {
  // nlohmann::json objects are std::map-backed, so keys serialize sorted.
  json j = {{"max_tokens", max_tokens},
            {"model_id", model_id},
            {"prompt", prompt},
            {"stop_sequences", stop_sequences},
            {"temperature", temperature}};
  return io::dump_compact(j);
}

CacheKey CacheKey::of(const GenRequest& request) {
  return CacheKey{text::sha256_hex(request.canonical())};
}

std::string prompt_digest(std::string_view prompt) { return text::sha256_hex(prompt); }

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(MockOptions options) : options_(std::move(options)) {
  if (options_.chunk_size == 0) throw ContractViolation("mock chunk size must be positive");
}

std::string MockBackend::response_for(const GenRequest& request) const {
  if (!options_.script.empty()) {
    if (auto it = options_.script.find(prompt_digest(request.prompt)); it != options_.script.end()) {
      return it->second;
    }
  }
  if (options_.responder) {
    if (auto generated = options_.responder(request)) return *generated;
  }
  return options_.default_text;
}

Completion MockBackend::complete(const GenRequest& request) {
  request.validate();
  calls_.fetch_add(1);
  if (options_.delay.count() > 0) std::this_thread::sleep_for(options_.delay);
  Completion c;
  c.text = response_for(request);
  c.model_id = request.model_id;
  c.token_count = text::estimate_tokens(c.text.size());
  return c;
}

Completion MockBackend::complete_stream(const GenRequest& request, const ChunkSink& sink) {
  Completion c = complete(request);
  std::vector<std::string> sent;
  for (auto& chunk : text::chunk_utf8(c.text, options_.chunk_size)) {
    if (options_.fail_after_chunks >= 0 &&
        sent.size() >= static_cast<std::size_t>(options_.fail_after_chunks)) {
      throw PartialStreamError("mock stream disconnected after " + std::to_string(sent.size()) +
                                   " chunk(s)",
                               std::move(sent));
    }
    sink(chunk);
    sent.push_back(std::move(chunk));
  }
  return c;
}

std::shared_ptr<MockBackend> mock_backend(std::map<std::string, std::string> script,
                                          std::string default_text) {
  MockOptions options;
  options.script = std::move(script);
  options.default_text = std::move(default_text);
  return std::make_shared<MockBackend>(std::move(options));
}

// ---------------------------------------------------------------------------
// RateLimiter

RateLimiter::RateLimiter(double rate_per_second)
    : rate_(rate_per_second), next_slot_(Clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0) return;
  const auto interval = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / rate_));
  Clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = Clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

std::shared_ptr<RateLimiter> RateLimiter::for_endpoint(const std::string& endpoint, double rate) {
  static std::mutex registry_mutex;
  static std::map<std::pair<std::string, double>, std::weak_ptr<RateLimiter>> registry;
  std::lock_guard lock(registry_mutex);
  auto& slot = registry[{endpoint, rate}];
  if (auto existing = slot.lock()) return existing;
  auto limiter = std::make_shared<RateLimiter>(rate);
  slot = limiter;
  return limiter;
}

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(std::shared_ptr<Backend> backend, GeneratorOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      cache_(options_.cache_dir),
      limiter_(RateLimiter::for_endpoint(options_.endpoint, options_.rate_limit)) {
  if (!backend_) throw ContractViolation("generator needs a backend");
  if (options_.chunk_size == 0) throw ContractViolation("chunk size must be positive");
}

Completion Generator::call_backend(const GenRequest& request, const ChunkSink* sink) {
  limiter_->acquire();
  backend_calls_.fetch_add(1);
  Completion c = sink ? backend_->complete_stream(request, *sink) : backend_->complete(request);
  c.from_cache = false;
  c.token_count = text::estimate_tokens(c.text.size());
  return c;
}

Completion Generator::generate(const GenRequest& request) {
  request.validate();
  const auto start = Clock::now();
  const auto key = CacheKey::of(request);
  if (auto hit = cache_.get(key)) {
    Completion c;
    c.text = std::move(hit->text);
    c.model_id = request.model_id;
    c.from_cache = true;
    c.token_count = text::estimate_tokens(c.text.size());
    c.latency_ms = elapsed_ms(start);
    return c;
  }
  bool coalesced = false;
  Completion c = flights_.run(
      key.digest,
      [&] {
        // A concurrent flight may have filled the cache between our lookup
        // and taking the flight.
        if (auto hit = cache_.get(key)) {
          Completion cached;
          cached.text = std::move(hit->text);
          cached.model_id = request.model_id;
          cached.from_cache = true;
          cached.token_count = text::estimate_tokens(cached.text.size());
          return cached;
        }
        Completion fresh = call_backend(request, nullptr);
        cache_.put(key, request, fresh);
        return fresh;
      },
      &coalesced);
  if (coalesced) {
    c.from_cache = true;
    c.latency_ms = elapsed_ms(start);
  }
  return c;
}

Completion Generator::generate_stream(const GenRequest& request, const ChunkSink& sink) {
  request.validate();
  const auto start = Clock::now();
  const auto key = CacheKey::of(request);
  if (auto hit = cache_.get(key)) {
    for (const auto& chunk : text::chunk_utf8(hit->text, options_.chunk_size)) sink(chunk);
    Completion c;
    c.text = std::move(hit->text);
    c.model_id = request.model_id;
    c.from_cache = true;
    c.token_count = text::estimate_tokens(c.text.size());
    c.latency_ms = elapsed_ms(start);
    return c;
  }
  Completion c = call_backend(request, &sink);
  cache_.put(key, request, c);
  return c;
}

// ---------------------------------------------------------------------------
// Configuration

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::openai_compat: return "openai_compat";
    case BackendKind::anthropic_compat: return "anthropic_compat";
    case BackendKind::mock: return "mock";
  }
  return "mock";
}

BackendKind backend_kind_from_string(std::string_view s) {
  if (s == "openai_compat") return BackendKind::openai_compat;
  if (s == "anthropic_compat") return BackendKind::anthropic_compat;
  if (s == "mock") return BackendKind::mock;
  throw ConfigError("unknown backend kind '" + std::string(s) + "'");
}

BackendConfig BackendConfig::from_document(const config::Document& doc) {
  BackendConfig c;
  c.kind = backend_kind_from_string(doc.get_string("kind", "mock"));
  c.endpoint = doc.get_string("endpoint", "");
  c.model_id = doc.get_string("model_id", c.kind == BackendKind::mock ? "mock-model" : "");
  c.auth_env = doc.get_string("auth_env", "");
  c.rate_limit = doc.get_double("rate_limit", 0);
  if (doc.contains("cache_dir")) c.cache_dir = doc.get_path("cache_dir", {});
  c.temperature = doc.get_double("temperature", c.temperature);
  c.max_tokens = static_cast<int>(doc.get_int("max_tokens", c.max_tokens));
  c.chunk_size = static_cast<std::size_t>(doc.get_int("chunk_size", 16));
  c.timeout_seconds = static_cast<int>(doc.get_int("timeout_seconds", c.timeout_seconds));
  c.anthropic_version = doc.get_string("anthropic_version", c.anthropic_version);

  c.mock_mode = doc.get_string("mock.mode", c.mock_mode);
  if (doc.contains("mock.script")) c.mock_script = doc.get_path("mock.script", {});
  c.mock_default = doc.get_string("mock.default", c.mock_default);
  c.mock_seed = static_cast<std::uint64_t>(doc.get_int("mock.seed", 0));
  c.mock_fail_after_chunks = static_cast<int>(doc.get_int("mock.fail_after_chunks", -1));
  c.mock_delay_ms = static_cast<int>(doc.get_int("mock.delay_ms", 0));

  if (c.kind != BackendKind::mock) {
    if (c.endpoint.empty()) throw ConfigError("remote backend needs an endpoint");
    if (c.model_id.empty()) throw ConfigError("remote backend needs a model_id");
  }
  if (c.mock_mode != "synthetic" && c.mock_mode != "script") {
    throw ConfigError("mock.mode must be 'synthetic' or 'script'");
  }
  if (c.chunk_size == 0) throw ConfigError("chunk_size must be positive");
  if (c.max_tokens < 1) throw ConfigError("max_tokens must be positive");
  if (c.rate_limit < 0) throw ConfigError("rate_limit must be non-negative");
  return c;
}

BackendConfig BackendConfig::load(const std::filesystem::path& path) {
  return from_document(config::Document::load(path));
}

std::map<std::string, std::string> load_script(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": script must be a JSON object");
  std::map<std::string, std::string> script;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it->is_string()) throw ConfigError(path.string() + ": script values must be strings");
    script[it.key()] = it->get<std::string>();
  }
  return script;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == BackendKind::mock) {
    MockOptions options;
    if (config.mock_script) options.script = load_script(*config.mock_script);
    options.default_text = config.mock_default;
    if (config.mock_mode == "synthetic") options.responder = make_synthetic_responder(config.mock_seed);
    options.chunk_size = config.chunk_size;
    options.fail_after_chunks = config.mock_fail_after_chunks;
    options.delay = std::chrono::milliseconds(config.mock_delay_ms);
    return std::make_shared<MockBackend>(std::move(options));
  }

  RemoteOptions options;
  options.shape = config.kind == BackendKind::openai_compat ? WireShape::openai_chat
                                                             : WireShape::anthropic_messages;
  options.endpoint = config.endpoint;
  if (!config.auth_env.empty()) {
    if (const char* token = std::getenv(config.auth_env.c_str())) options.api_key = token;
  }
  options.timeout_seconds = config.timeout_seconds;
  options.anthropic_version = config.anthropic_version;
  return std::make_shared<RemoteBackend>(std::move(options));
}

std::unique_ptr<Generator> make_generator(const BackendConfig& config) {
  GeneratorOptions options;
  options.cache_dir = config.cache_dir;
  options.rate_limit = config.rate_limit;
  options.endpoint = config.kind == BackendKind::mock ? "mock" : config.endpoint;
  options.chunk_size = config.chunk_size;
  return std::make_unique<Generator>(make_backend(config), std::move(options));
}

}  // namespace qsuggest::backend
