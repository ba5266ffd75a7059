#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/jsonl.hpp"

namespace qsuggest::corpus {

struct Product {
  std::string asin;
  std::string title;
  std::optional<std::string> brand;
  std::vector<std::string> categories;
  std::vector<std::string> description;
  std::vector<std::string> features;
  std::optional<double> price;
};

struct Review {
  std::string asin;
  std::string reviewer_id;
  std::string text;
  std::optional<std::string> summary;
  std::int64_t helpful_votes = 0;
  bool vine = false;
  int rating = 0;
  std::int64_t timestamp = 0;
};

// The threshold on helpfulness votes is a tunable: "high" is not quantified
// anywhere, and 5 keeps small corpora usable.
struct FilterPolicy {
  std::int64_t min_helpful_votes = 5;
  bool accept_vine = true;
  std::size_t min_text_chars = 80;
  std::size_t max_text_chars = 2000;

  // Throws ContractViolation unless min_text_chars < max_text_chars.
  void validate() const;
};

enum class ContextSource { review, catalog };

std::string_view to_string(ContextSource s);
ContextSource context_source_from_string(std::string_view s);

struct ProductContext {
  std::string context_id;
  std::string asin;
  ContextSource source = ContextSource::catalog;
  std::string text;
  std::string product_title;

  friend bool operator==(const ProductContext&, const ProductContext&) = default;
};

json to_json(const ProductContext& c);
ProductContext context_from_json(const json& j);

// Counters may be shared by loaders running on different threads.
struct LoadStats {
  std::atomic<std::size_t> records{0};
  std::atomic<std::size_t> malformed{0};
};

struct SkipEntry {
  std::string asin;
  std::string reason;
};

// Field mapping from the public reviews dump. Return nullopt and set `why`
// for records that violate the type invariants.
std::optional<Product> parse_product(const json& record, std::string* why = nullptr);
std::optional<Review> parse_review(const json& record, std::string* why = nullptr);

// "2,401" -> 2401. Returns nullopt for anything that is not a non-negative
// integer with optional thousands separators.
std::optional<std::int64_t> parse_vote_count(std::string_view s);

// Streams well-formed records in file order. Malformed lines are counted and
// skipped. Throws IoError for unreadable files and FormatError after the pass
// when more than half of the non-blank lines were malformed. Duplicate asins
// count as malformed.
void load_catalog(const std::filesystem::path& path, const std::function<void(Product&&)>& sink,
                  LoadStats& stats);
void load_reviews(const std::filesystem::path& path, const std::function<void(Review&&)>& sink,
                  LoadStats& stats);

std::vector<Product> load_catalog(const std::filesystem::path& path, LoadStats* stats = nullptr);
std::vector<Review> load_reviews(const std::filesystem::path& path, LoadStats* stats = nullptr);

// Kept iff (votes >= min OR (vine AND accept_vine)) AND the trimmed text
// length lies in [min_text_chars, max_text_chars].
bool passes_filter(const Review& review, const FilterPolicy& policy);
std::vector<Review> filter_reviews(const std::vector<Review>& reviews, const FilterPolicy& policy);

// Cuts `text` (already whitespace-normalized) to at most max_chars bytes,
// preferring the last sentence end ('.', '!' or '?' followed by a space or
// the end of text) inside the limit. Falls back to the last word break, and
// then to a UTF-8-safe hard cut, when the sentence cut would leave fewer than
// min_chars.
std::string truncate_at_sentence(std::string_view text, std::size_t max_chars,
                                 std::size_t min_chars = 0);

std::string make_context_id(std::string_view asin, ContextSource source,
                            std::string_view normalized_text);

// Description blocks then features, joined by single spaces.
std::string catalog_text(const Product& product);

// One catalog context when the catalog text reaches min_text_chars, plus one
// context per review given. Reviews are not re-filtered here; callers pass the
// survivors of filter_reviews. Products yielding nothing get a skip entry.
std::vector<ProductContext> build_contexts(const Product& product, const std::vector<Review>& reviews,
                                           const FilterPolicy& policy,
                                           std::vector<SkipEntry>* skip_log = nullptr);

// Deterministic sample of min(n, available) contexts. When both sources are
// present the sample is allocated proportionally across them. Result is
// ordered by context_id; input order does not matter.
std::vector<ProductContext> sample_eval_set(const std::vector<ProductContext>& contexts,
                                            std::size_t n, std::uint64_t seed);

struct IngestResult {
  std::vector<Product> products;
  std::vector<ProductContext> contexts;
  std::vector<SkipEntry> skipped;
  std::size_t catalog_malformed = 0;
  std::size_t reviews_malformed = 0;
  std::size_t reviews_loaded = 0;
  std::size_t reviews_kept = 0;
  std::size_t reviews_orphaned = 0;
};

// Loads both files concurrently, filters reviews, and builds contexts for every
// product in asin order.
IngestResult ingest(const std::filesystem::path& catalog_path,
                    const std::filesystem::path& reviews_path, const FilterPolicy& policy);

std::vector<ProductContext> read_contexts(const std::filesystem::path& path);
std::string contexts_to_jsonl(const std::vector<ProductContext>& contexts);
std::string skip_log_text(const std::vector<SkipEntry>& skipped);

}  // namespace qsuggest::corpus
