#include "qsuggest/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <map>
#include <unordered_set>

#include "qsuggest/deterministic_rng.hpp"
#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::corpus {
namespace {

constexpr std::string_view kVineMarker = "Vine Customer Review";

std::optional<std::string> optional_string(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) return std::nullopt;
  auto s = text::normalize_whitespace(it->get<std::string>());
  if (s.empty()) return std::nullopt;
  return s;
}

// Accepts a string or a list of strings; drops empty blocks.
std::vector<std::string> string_list(const json& record, const char* key) {
  std::vector<std::string> out;
  auto it = record.find(key);
  if (it == record.end()) return out;
  auto add = [&](const json& v) {
    if (!v.is_string()) return;
    auto s = text::normalize_whitespace(v.get<std::string>());
    if (!s.empty()) out.push_back(std::move(s));
  };
  if (it->is_array()) {
    for (const auto& v : *it) add(v);
  } else {
    add(*it);
  }
  return out;
}

std::optional<double> parse_price(const json& record) {
  auto it = record.find("price");
  if (it == record.end()) return std::nullopt;
  if (it->is_number()) {
    double v = it->get<double>();
    return v >= 0 ? std::optional<double>(v) : std::nullopt;
  }
  if (!it->is_string()) return std::nullopt;
  std::string s;
  for (char c : it->get<std::string>()) {
    if (c == '$' || c == ',' || c == ' ') continue;
    s.push_back(c);
  }
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || v < 0) return std::nullopt;
  return v;
}

bool truthy_flag(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<long long>() != 0;
  if (v.is_string()) {
    auto s = text::to_lower(text::trim(v.get<std::string>()));
    return s == "y" || s == "yes" || s == "true" || s == "1";
  }
  return false;
}

template <typename T>
void load_records(const std::filesystem::path& path,
                  const std::function<std::optional<T>(const json&, std::string*)>& parse,
                  const std::function<bool(const T&)>& accept, const std::function<void(T&&)>& sink,
                  LoadStats& stats) {
  std::size_t total = 0;
  std::size_t bad = 0;
  io::for_each_line(path, [&](std::string_view line, std::size_t) {
    if (text::trim(line).empty()) return;
    ++total;
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    std::optional<T> parsed;
    if (record.is_object()) parsed = parse(record, nullptr);
    if (!parsed || !accept(*parsed)) {
      ++bad;
      stats.malformed.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    stats.records.fetch_add(1, std::memory_order_relaxed);
    sink(std::move(*parsed));
  });
  if (total > 0 && bad * 2 > total) {
    throw FormatError(path.string() + ": " + std::to_string(bad) + " of " + std::to_string(total) +
                      " lines malformed; wrong file?");
  }
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

void FilterPolicy::validate() const {
  if (min_helpful_votes < 0) throw ContractViolation("min_helpful_votes must be non-negative");
  if (min_text_chars >= max_text_chars) {
    throw ContractViolation("min_text_chars must be below max_text_chars");
  }
}

std::string_view to_string(ContextSource s) {
  return s == ContextSource::review ? "review" : "catalog";
}

ContextSource context_source_from_string(std::string_view s) {
  if (s == "review") return ContextSource::review;
  if (s == "catalog") return ContextSource::catalog;
  throw FormatError("unknown context source '" + std::string(s) + "'");
}

json to_json(const ProductContext& c) {
  return json{{"context_id", c.context_id},
              {"asin", c.asin},
              {"source", to_string(c.source)},
              {"text", c.text},
              {"product_title", c.product_title}};
}

ProductContext context_from_json(const json& j) {
  try {
    ProductContext c;
    c.context_id = j.at("context_id").get<std::string>();
    c.asin = j.at("asin").get<std::string>();
    c.source = context_source_from_string(j.at("source").get<std::string>());
    c.text = j.at("text").get<std::string>();
    c.product_title = j.at("product_title").get<std::string>();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad context record: ") + e.what());
  }
}

std::optional<std::int64_t> parse_vote_count(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  std::string digits;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == ',') {
      // A separator needs a digit on both sides.
      if (digits.empty() || i + 1 >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
        return std::nullopt;
      }
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    digits.push_back(c);
  }
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || end != digits.data() + digits.size()) return std::nullopt;
  return v;
}

std::optional<Product> parse_product(const json& record, std::string* why) {
  auto fail = [&](const char* reason) -> std::optional<Product> {
    if (why) *why = reason;
    return std::nullopt;
  };
  Product p;
  auto asin = optional_string(record, "asin");
  if (!asin) return fail("missing asin");
  auto title = optional_string(record, "title");
  if (!title) return fail("missing title");
  p.asin = std::move(*asin);
  p.title = std::move(*title);
  p.brand = optional_string(record, "brand");
  p.categories = string_list(record, "category");
  p.description = string_list(record, "description");
  p.features = string_list(record, "feature");
  p.price = parse_price(record);
  return p;
}

std::optional<Review> parse_review(const json& record, std::string* why) {
  auto fail = [&](const char* reason) -> std::optional<Review> {
    if (why) *why = reason;
    return std::nullopt;
  };
  Review r;
  auto asin = optional_string(record, "asin");
  if (!asin) return fail("missing asin");
  auto reviewer = optional_string(record, "reviewerID");
  if (!reviewer) return fail("missing reviewerID");
  r.asin = std::move(*asin);
  r.reviewer_id = std::move(*reviewer);

  if (auto it = record.find("reviewText"); it != record.end()) {
    if (!it->is_string()) return fail("reviewText not a string");
    r.text = it->get<std::string>();
  }
  r.summary = optional_string(record, "summary");

  if (auto it = record.find("vote"); it != record.end() && !it->is_null()) {
    if (it->is_number_integer()) {
      r.helpful_votes = it->get<std::int64_t>();
    } else if (it->is_string()) {
      auto v = parse_vote_count(it->get<std::string>());
      if (!v) return fail("bad vote");
      r.helpful_votes = *v;
    } else {
      return fail("bad vote");
    }
    if (r.helpful_votes < 0) return fail("negative vote");
  }

  auto overall = record.find("overall");
  if (overall == record.end() || !overall->is_number()) return fail("missing overall");
  double rating = overall->get<double>();
  if (rating != std::floor(rating) || rating < 1 || rating > 5) return fail("rating out of range");
  r.rating = static_cast<int>(rating);

  if (auto it = record.find("unixReviewTime"); it != record.end() && it->is_number_integer()) {
    r.timestamp = it->get<std::int64_t>();
  }

  if (auto it = record.find("vine"); it != record.end()) r.vine = truthy_flag(*it);
  if (!r.vine && r.text.find(kVineMarker) != std::string::npos) r.vine = true;
  return r;
}

void load_catalog(const std::filesystem::path& path, const std::function<void(Product&&)>& sink,
                  LoadStats& stats) {
  std::unordered_set<std::string> seen;
  load_records<Product>(
      path, [](const json& j, std::string* why) { return parse_product(j, why); },
      [&](const Product& p) { return seen.insert(p.asin).second; }, sink, stats);
}

void load_reviews(const std::filesystem::path& path, const std::function<void(Review&&)>& sink,
                  LoadStats& stats) {
  load_records<Review>(
      path, [](const json& j, std::string* why) { return parse_review(j, why); },
      [](const Review&) { return true; }, sink, stats);
}

std::vector<Product> load_catalog(const std::filesystem::path& path, LoadStats* stats) {
  LoadStats local;
  std::vector<Product> out;
  load_catalog(path, [&](Product&& p) { out.push_back(std::move(p)); }, stats ? *stats : local);
  return out;
}

std::vector<Review> load_reviews(const std::filesystem::path& path, LoadStats* stats) {
  LoadStats local;
  std::vector<Review> out;
  load_reviews(path, [&](Review&& r) { out.push_back(std::move(r)); }, stats ? *stats : local);
  return out;
}

bool passes_filter(const Review& review, const FilterPolicy& policy) {
  const bool trusted =
      review.helpful_votes >= policy.min_helpful_votes || (review.vine && policy.accept_vine);
  if (!trusted) return false;
  const auto len = text::trim(review.text).size();
  return len >= policy.min_text_chars && len <= policy.max_text_chars;
}

std::vector<Review> filter_reviews(const std::vector<Review>& reviews, const FilterPolicy& policy) {
  std::vector<Review> out;
  for (const auto& r : reviews) {
    if (passes_filter(r, policy)) out.push_back(r);
  }
  return out;
}

std::string truncate_at_sentence(std::string_view s, std::size_t max_chars, std::size_t min_chars) {
  if (s.size() <= max_chars) return std::string(s);

  // Last terminator at index i with i + 1 <= max_chars and a following space.
  for (std::size_t cut = max_chars; cut >= 1; --cut) {
    if (is_terminator(s[cut - 1]) && (cut == s.size() || s[cut] == ' ')) {
      if (cut >= min_chars) return std::string(s.substr(0, cut));
      break;
    }
  }
  std::size_t space = s.rfind(' ', max_chars);
  if (space != std::string_view::npos && space > 0 && space >= min_chars) {
    return std::string(text::trim(s.substr(0, space)));
  }
  return std::string(s.substr(0, text::utf8_floor(s, max_chars)));
}

std::string make_context_id(std::string_view asin, ContextSource source,
                            std::string_view normalized_text) {
  return text::short_id({asin, to_string(source), normalized_text});
}

std::string catalog_text(const Product& product) {
  std::string joined;
  auto append = [&](const std::string& block) {
    if (!joined.empty()) joined.push_back(' ');
    joined += block;
  };
  for (const auto& d : product.description) append(d);
  for (const auto& f : product.features) append(f);
  return text::normalize_whitespace(joined);
}

std::vector<ProductContext> build_contexts(const Product& product, const std::vector<Review>& reviews,
                                           const FilterPolicy& policy,
                                           std::vector<SkipEntry>* skip_log) {
  policy.validate();
  std::vector<ProductContext> out;
  auto emit = [&](ContextSource source, const std::string& normalized) {
    if (normalized.size() < policy.min_text_chars) return;
    auto cut = truncate_at_sentence(normalized, policy.max_text_chars, policy.min_text_chars);
    if (cut.size() < policy.min_text_chars) return;
    ProductContext c;
    c.context_id = make_context_id(product.asin, source, cut);
    c.asin = product.asin;
    c.source = source;
    c.text = std::move(cut);
    c.product_title = product.title;
    out.push_back(std::move(c));
  };

  emit(ContextSource::catalog, catalog_text(product));
  for (const auto& r : reviews) {
    if (r.asin != product.asin) {
      throw ContractViolation("review for " + r.asin + " passed with product " + product.asin);
    }
    emit(ContextSource::review, text::normalize_whitespace(r.text));
  }

  // Identical review texts produce the same id; keep one.
  std::unordered_set<std::string> ids;
  out.erase(std::remove_if(out.begin(), out.end(),
                           [&](const ProductContext& c) { return !ids.insert(c.context_id).second; }),
            out.end());

  if (out.empty() && skip_log) {
    skip_log->push_back({product.asin, reviews.empty() ? "no catalog text and no surviving reviews"
                                                       : "no text within length bounds"});
  }
  return out;
}

std::vector<ProductContext> sample_eval_set(const std::vector<ProductContext>& contexts,
                                            std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ContractViolation("sample size must be at least 1");

  std::vector<ProductContext> reviews;
  std::vector<ProductContext> catalog;
  for (const auto& c : contexts) {
    (c.source == ContextSource::review ? reviews : catalog).push_back(c);
  }
  auto by_id = [](const ProductContext& a, const ProductContext& b) {
    return a.context_id < b.context_id;
  };
  std::sort(reviews.begin(), reviews.end(), by_id);
  std::sort(catalog.begin(), catalog.end(), by_id);

  const std::size_t total = reviews.size() + catalog.size();
  const std::size_t take = std::min(n, total);

  std::size_t take_reviews = 0;
  if (total > 0) {
    take_reviews = static_cast<std::size_t>(
        std::llround(static_cast<double>(take) * static_cast<double>(reviews.size()) /
                     static_cast<double>(total)));
  }
  if (!reviews.empty() && !catalog.empty() && take >= 2) {
    take_reviews = std::clamp<std::size_t>(take_reviews, 1, take - 1);
  }
  take_reviews = std::min(take_reviews, reviews.size());
  std::size_t take_catalog = std::min(take - take_reviews, catalog.size());
  take_reviews = take - take_catalog;

  DeterministicRng review_rng(seed);
  DeterministicRng catalog_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  review_rng.shuffle(reviews);
  catalog_rng.shuffle(catalog);

  std::vector<ProductContext> out(reviews.begin(), reviews.begin() + static_cast<long>(take_reviews));
  out.insert(out.end(), catalog.begin(), catalog.begin() + static_cast<long>(take_catalog));
  std::sort(out.begin(), out.end(), by_id);
  return out;
}

IngestResult ingest(const std::filesystem::path& catalog_path,
                    const std::filesystem::path& reviews_path, const FilterPolicy& policy) {
  policy.validate();
  LoadStats catalog_stats;
  LoadStats review_stats;
  auto catalog_future =
      std::async(std::launch::async, [&] { return load_catalog(catalog_path, &catalog_stats); });
  auto reviews_future =
      std::async(std::launch::async, [&] { return load_reviews(reviews_path, &review_stats); });

  IngestResult result;
  std::exception_ptr failure;
  try {
    result.products = catalog_future.get();
  } catch (...) {
    failure = std::current_exception();
  }
  std::vector<Review> reviews;
  try {
    reviews = reviews_future.get();
  } catch (...) {
    if (!failure) failure = std::current_exception();
  }
  if (failure) std::rethrow_exception(failure);

  result.catalog_malformed = catalog_stats.malformed.load();
  result.reviews_malformed = review_stats.malformed.load();
  result.reviews_loaded = reviews.size();

  std::sort(result.products.begin(), result.products.end(),
            [](const Product& a, const Product& b) { return a.asin < b.asin; });

  std::map<std::string, std::vector<Review>> by_asin;
  for (auto& r : reviews) {
    if (!passes_filter(r, policy)) continue;
    ++result.reviews_kept;
    by_asin[r.asin].push_back(std::move(r));
  }
  for (auto& [asin, group] : by_asin) {
    // Input order of reviews must not change the context set or its order.
    std::sort(group.begin(), group.end(), [](const Review& a, const Review& b) {
      return std::tie(a.reviewer_id, a.timestamp, a.text) < std::tie(b.reviewer_id, b.timestamp, b.text);
    });
  }

  std::unordered_set<std::string> known;
  for (const auto& p : result.products) {
    known.insert(p.asin);
    auto it = by_asin.find(p.asin);
    static const std::vector<Review> kNone;
    auto contexts = build_contexts(p, it == by_asin.end() ? kNone : it->second, policy, &result.skipped);
    for (auto& c : contexts) result.contexts.push_back(std::move(c));
  }
  for (const auto& [asin, group] : by_asin) {
    if (!known.count(asin)) result.reviews_orphaned += group.size();
  }
  return result;
}

std::vector<ProductContext> read_contexts(const std::filesystem::path& path) {
  std::vector<ProductContext> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(context_from_json(j));
  return out;
}

std::string contexts_to_jsonl(const std::vector<ProductContext>& contexts) {
  std::string out;
  for (const auto& c : contexts) {
    out += io::dump_compact(to_json(c));
    out.push_back('\n');
  }
  return out;
}

std::string skip_log_text(const std::vector<SkipEntry>& skipped) {
  std::string out;
  for (const auto& s : skipped) out += s.asin + "\t" + s.reason + "\n";
  return out;
}

}  // namespace qsuggest::corpus
