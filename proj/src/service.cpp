#include "qsuggest/service.hpp"

#include <algorithm>
#include <set>

#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::app {

json to_json(const SuggestionBundle& b) {
  json suggestions = json::array();
  for (const auto& s : b.suggestions) suggestions.push_back(qparser::to_json(s));
  return json{{"asin", b.asin},
              {"k", b.k},
              {"suggestions", suggestions},
              {"context_map", b.context_map},
              {"skipped_contexts", b.skipped_contexts},
              {"from_cache", b.from_cache}};
}

json to_json(const ChatAnswer& a) {
  json j = {{"answer_absent", a.answer_absent}, {"matched_by", a.matched_by}};
  if (a.answer_absent) {
    j["answer_text"] = "The answer was not found in the product information.";
    j["source_context_id"] = nullptr;
  } else {
    j["answer_text"] = a.answer_text;
    j["source_context_id"] = a.source_context_id;
    j["source"] = a.source;
  }
  if (a.score) j["score"] = *a.score;
  return j;
}

bool rank_before(const qparser::QuestionSuggestion& a, const qparser::QuestionSuggestion& b) {
  if (a.interest_score != b.interest_score) return a.interest_score > b.interest_score;
  if (a.question.size() != b.question.size()) return a.question.size() < b.question.size();
  if (a.question != b.question) return a.question < b.question;
  return a.context_id < b.context_id;
}

std::vector<qparser::QuestionSuggestion> rank_suggestions(std::vector<qparser::QuestionSuggestion> all) {
  std::sort(all.begin(), all.end(), rank_before);
  std::set<std::string> seen;
  std::vector<qparser::QuestionSuggestion> out;
  for (auto& s : all) {
    if (seen.insert(text::to_lower(text::normalize_whitespace(s.question))).second) out.push_back(std::move(s));
  }
  return out;
}

SuggestionService::SuggestionService(std::vector<corpus::ProductContext> contexts,
                                     backend::Generator& generator, ServiceOptions options)
    : generator_(generator), options_(std::move(options)) {
  if (options_.default_k < 1 || options_.default_k > 10) throw ConfigError("default k must be in [1, 10]");
  if (options_.prompt_template) options_.prompt_template->validate();
  for (auto& c : contexts) by_asin_[c.asin].push_back(std::move(c));
  for (auto& [asin, list] : by_asin_) {
    std::sort(list.begin(), list.end(),
              [](const auto& a, const auto& b) { return a.context_id < b.context_id; });
    list.erase(std::unique(list.begin(), list.end(),
                           [](const auto& a, const auto& b) { return a.context_id == b.context_id; }),
               list.end());
    for (const auto& c : list) by_id_[c.context_id] = &c;
  }
}

std::vector<ProductSummary> SuggestionService::products() const {
  std::vector<ProductSummary> out;
  for (const auto& [asin, list] : by_asin_) {
    out.push_back({asin, list.empty() ? "" : list.front().product_title, list.size()});
  }
  return out;
}

bool SuggestionService::has_product(const std::string& asin) const { return by_asin_.count(asin) > 0; }

const std::vector<corpus::ProductContext>& SuggestionService::contexts_for(const std::string& asin) const {
  auto it = by_asin_.find(asin);
  if (it == by_asin_.end()) throw NotFoundError("unknown asin " + asin);
  return it->second;
}

int SuggestionService::resolve_k(std::optional<int> k) const {
  const int value = k.value_or(options_.default_k);
  if (value < 1 || value > 10) throw ContractViolation("k must be in [1, 10], got " + std::to_string(value));
  return value;
}

backend::GenRequest SuggestionService::request_for(const corpus::ProductContext& context, int k) const {
  promptkit::GenConfig config;
  config.k_questions = k;
  config.temperature = options_.temperature;
  config.max_tokens = options_.max_tokens;
  backend::GenRequest request;
  request.prompt = options_.prompt_template
                       ? promptkit::render_generation_prompt(context, config, *options_.prompt_template)
                       : promptkit::render_generation_prompt(context, config);
  request.model_id = options_.model_id;
  request.temperature = options_.temperature;
  request.max_tokens = options_.max_tokens;
  return request;
}

SuggestionBundle SuggestionService::build(const std::string& asin, int k, const TokenSink* sink) {
  SuggestionBundle bundle;
  bundle.asin = asin;
  bundle.k = k;
  bool all_cached = true;
  std::vector<qparser::QuestionSuggestion> all;
  for (const auto& context : contexts_for(asin)) {
    backend::GenRequest request;
    try {
      request = request_for(context, k);
    } catch (const OversizeError& e) {
      bundle.skipped_contexts.push_back(context.context_id + ": " + e.what());
      continue;
    }
    backend::Completion completion;
    if (sink) {
      completion = generator_.generate_stream(
          request, [&](std::string_view chunk) { (*sink)(context.context_id, chunk); });
    } else {
      completion = generator_.generate(request);
    }
    all_cached = all_cached && completion.from_cache;
    auto parsed = qparser::parse_suggestions(completion.text, context.context_id);
    for (auto& s : parsed.suggestions) all.push_back(std::move(s));
  }
  bundle.suggestions = rank_suggestions(std::move(all));
  for (const auto& s : bundle.suggestions) bundle.context_map[qparser::suggestion_ref(s)] = s.context_id;
  bundle.from_cache = all_cached;
  return bundle;
}

void SuggestionService::remember(const SuggestionBundle& bundle) {
  std::lock_guard lock(mutex_);
  for (const auto& [ref, context_id] : bundle.context_map) ref_to_context_[ref] = context_id;
  auto stored = bundle;
  stored.from_cache = true;
  bundles_[{bundle.asin, bundle.k}] = std::move(stored);
}

SuggestionBundle SuggestionService::suggestions(const std::string& asin, std::optional<int> k) {
  const int kk = resolve_k(k);
  if (!has_product(asin)) throw NotFoundError("unknown asin " + asin);
  const auto key = std::make_pair(asin, kk);
  {
    std::lock_guard lock(mutex_);
    if (auto it = bundles_.find(key); it != bundles_.end()) return it->second;
  }
  bool coalesced = false;
  auto bundle = flights_.run(
      key,
      [&] {
        {
          std::lock_guard lock(mutex_);
          if (auto it = bundles_.find(key); it != bundles_.end()) return it->second;
        }
        auto fresh = build(asin, kk, nullptr);
        remember(fresh);
        return fresh;
      },
      &coalesced);
  if (coalesced) bundle.from_cache = true;
  return bundle;
}

SuggestionBundle SuggestionService::stream_suggestions(const std::string& asin, std::optional<int> k,
                                                       const TokenSink& sink) {
  const int kk = resolve_k(k);
  if (!has_product(asin)) throw NotFoundError("unknown asin " + asin);
  auto bundle = build(asin, kk, &sink);
  remember(bundle);
  return bundle;
}

ChatAnswer SuggestionService::chat_by_ref(const std::string& asin, const std::string& suggestion_ref) {
  if (!has_product(asin)) throw NotFoundError("unknown asin " + asin);
  auto lookup = [&]() -> std::optional<std::string> {
    std::lock_guard lock(mutex_);
    auto it = ref_to_context_.find(suggestion_ref);
    if (it == ref_to_context_.end()) return std::nullopt;
    return it->second;
  };
  auto context_id = lookup();
  if (!context_id) {
    // The client may hold a ref from an earlier process; regenerate the
    // default bundle (a cache hit when the response cache is on disk).
    suggestions(asin);
    context_id = lookup();
  }
  if (!context_id) throw NotFoundError("unknown suggestion_ref " + suggestion_ref);
  const auto* context = by_id_.at(*context_id);
  if (context->asin != asin) {
    throw NotFoundError("suggestion_ref " + suggestion_ref + " does not belong to " + asin);
  }
  ChatAnswer a;
  a.answer_text = context->text;
  a.source_context_id = context->context_id;
  a.source = std::string(corpus::to_string(context->source));
  a.matched_by = "suggestion_ref";
  return a;
}

ChatAnswer SuggestionService::chat_free_text(const std::string& asin, std::string_view question) const {
  const auto& list = contexts_for(asin);
  if (text::trim(question).empty()) throw ContractViolation("question is empty");
  const corpus::ProductContext* best = nullptr;
  double best_score = -1;
  for (const auto& c : list) {
    const double score = qparser::lexical_answerability(question, c);
    // Contexts are ordered by id, so ties go to the smallest id.
    if (score > best_score) {
      best_score = score;
      best = &c;
    }
  }
  ChatAnswer a;
  a.matched_by = "free_text";
  a.score = std::max(best_score, 0.0);
  if (!best || best_score <= options_.answer_threshold) {
    a.answer_absent = true;
    return a;
  }
  a.answer_text = best->text;
  a.source_context_id = best->context_id;
  a.source = std::string(corpus::to_string(best->source));
  return a;
}

}  // namespace qsuggest::app
