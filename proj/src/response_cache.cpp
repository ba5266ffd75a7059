#include <fstream>

#include "qsuggest/backend.hpp"
#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::backend {

namespace fs = std::filesystem;

ResponseCache::ResponseCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {
  if (dir_) {
    std::error_code ec;
    fs::create_directories(*dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + dir_->string() + ": " + ec.message());
  }
}

fs::path ResponseCache::text_path(const CacheKey& key) const {
  if (!dir_) throw ContractViolation("in-memory cache has no files");
  return *dir_ / (key.digest + ".txt");
}

fs::path ResponseCache::meta_path(const CacheKey& key) const {
  if (!dir_) throw ContractViolation("in-memory cache has no files");
  return *dir_ / (key.digest + ".meta.json");
}

std::optional<CachedResponse> ResponseCache::get(const CacheKey& key) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(key.digest); it != memory_.end()) return it->second;
  }
  if (!dir_) return std::nullopt;

  const auto text_file = text_path(key);
  std::error_code ec;
  if (!fs::exists(text_file, ec)) return std::nullopt;
  CachedResponse entry;
  try {
    entry.text = io::read_file(text_file);
    const auto meta_file = meta_path(key);
    if (fs::exists(meta_file, ec)) {
      entry.meta = json::parse(io::read_file(meta_file), nullptr, false);
      if (entry.meta.is_discarded()) entry.meta = json::object();
    }
  } catch (const IoError&) {
    return std::nullopt;
  }
  std::lock_guard lock(mutex_);
  memory_.emplace(key.digest, entry);
  return entry;
}

void ResponseCache::put(const CacheKey& key, const GenRequest& request, const Completion& completion) {
  CachedResponse entry;
  entry.text = completion.text;
  entry.meta = {{"digest", key.digest},
                {"model_id", request.model_id},
                {"temperature", request.temperature},
                {"max_tokens", request.max_tokens},
                {"prompt_sha256", text::sha256_hex(request.prompt)},
                {"token_count", text::estimate_tokens(completion.text.size())},
                {"bytes", completion.text.size()}};
  if (dir_) {
    // Text first: a reader that sees the text file may see no sidecar yet,
    // which get() tolerates.
    io::write_file_atomic(text_path(key), entry.text);
    io::write_file_atomic(meta_path(key), io::dump_pretty(entry.meta));
  }
  std::lock_guard lock(mutex_);
  memory_[key.digest] = std::move(entry);
}

}  // namespace qsuggest::backend
