#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsuggest/backend.hpp"
#include "qsuggest/corpus.hpp"
#include "qsuggest/promptkit.hpp"
#include "qsuggest/qparser.hpp"
#include "qsuggest/single_flight.hpp"

namespace qsuggest::app {

struct SuggestionBundle {
  std::string asin;
  int k = 3;
  // Ranked: interest desc, shorter question, question text, context_id.
  std::vector<qparser::QuestionSuggestion> suggestions;
  std::map<std::string, std::string> context_map;  // suggestion_ref -> context_id
  std::vector<std::string> skipped_contexts;       // "context_id: reason"
  bool from_cache = false;
};

json to_json(const SuggestionBundle& b);

// Strict weak order used for ranking; total over distinct (question, context).
bool rank_before(const qparser::QuestionSuggestion& a, const qparser::QuestionSuggestion& b);

// Sorts by rank_before and drops repeats of the same question (case and
// whitespace-insensitive), keeping the best-ranked copy.
std::vector<qparser::QuestionSuggestion> rank_suggestions(std::vector<qparser::QuestionSuggestion> all);

struct ProductSummary {
  std::string asin;
  std::string title;
  std::size_t context_count = 0;
};

struct ChatAnswer {
  bool answer_absent = false;
  std::string answer_text;
  std::string source_context_id;
  std::string source;  // review | catalog
  std::optional<double> score;  // free-text questions only
  std::string matched_by;       // suggestion_ref | free_text
};

json to_json(const ChatAnswer& a);

struct ServiceOptions {
  int default_k = 3;
  std::string model_id = "mock-model";
  double temperature = 0.7;
  int max_tokens = 512;
  // Free-text answers need a best overlap strictly above this.
  double answer_threshold = 0.2;
  std::optional<promptkit::PromptTemplate> prompt_template;
  std::size_t replay_chunk_size = 16;
};

// (context_id, chunk) for every piece of raw completion text, in order.
using TokenSink = std::function<void(const std::string& context_id, std::string_view chunk)>;

// Suggestion generation, ranking and grounded chat over an ingested context set.
// Thread-safe.
class SuggestionService {
 public:
  SuggestionService(std::vector<corpus::ProductContext> contexts, backend::Generator& generator,
                    ServiceOptions options = {});

  std::vector<ProductSummary> products() const;
  bool has_product(const std::string& asin) const;
  const std::vector<corpus::ProductContext>& contexts_for(const std::string& asin) const;

  // Cached per (asin, k); concurrent misses for the same key share one
  // generation. Throws NotFoundError for unknown asins and ContractViolation
  // for k outside [1, 10].
  SuggestionBundle suggestions(const std::string& asin, std::optional<int> k = std::nullopt);

  // Streams each context's raw completion through `sink`, then returns the
  // bundle (and caches it).
  SuggestionBundle stream_suggestions(const std::string& asin, std::optional<int> k, const TokenSink& sink);

  ChatAnswer chat_by_ref(const std::string& asin, const std::string& suggestion_ref);
  ChatAnswer chat_free_text(const std::string& asin, std::string_view question) const;

  const ServiceOptions& options() const { return options_; }
  backend::Generator& generator() { return generator_; }

 private:
  int resolve_k(std::optional<int> k) const;
  backend::GenRequest request_for(const corpus::ProductContext& context, int k) const;
  SuggestionBundle build(const std::string& asin, int k, const TokenSink* sink);
  void remember(const SuggestionBundle& bundle);

  std::map<std::string, std::vector<corpus::ProductContext>> by_asin_;
  std::map<std::string, const corpus::ProductContext*> by_id_;
  backend::Generator& generator_;
  ServiceOptions options_;

  mutable std::mutex mutex_;
  std::map<std::pair<std::string, int>, SuggestionBundle> bundles_;
  std::map<std::string, std::string> ref_to_context_;
  SingleFlight<std::pair<std::string, int>, SuggestionBundle> flights_;
};

}  // namespace qsuggest::app
