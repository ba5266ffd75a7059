#include "qsuggest/synthetic_responder.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include "qsuggest/deterministic_rng.hpp"
#include "qsuggest/promptkit.hpp"
#include "qsuggest/qparser.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::backend {
namespace {

std::uint64_t prompt_seed(std::string_view prompt, std::uint64_t seed) {
  auto hex = text::sha256_hex(prompt);
  return std::stoull(hex.substr(0, 16), nullptr, 16) ^ seed;
}

std::string field_after(std::string_view block, std::string_view label) {
  auto pos = block.find(label);
  if (pos == std::string_view::npos) return {};
  pos += label.size();
  auto end = block.find('\n', pos);
  return std::string(block.substr(pos, end == std::string_view::npos ? end : end - pos));
}

int requested_k(std::string_view prompt) {
  static constexpr std::string_view kLead = "the top ";
  auto pos = prompt.find(kLead);
  while (pos != std::string_view::npos) {
    auto rest = prompt.substr(pos + kLead.size());
    int k = 0;
    std::size_t i = 0;
    while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) k = k * 10 + (rest[i++] - '0');
    if (i > 0 && text::starts_with(rest.substr(i), " product questions")) return std::clamp(k, 1, 10);
    pos = prompt.find(kLead, pos + 1);
  }
  return 1;
}

// Distinct content words of the context, longest-first within first-seen order.
std::vector<std::string> topic_words(std::string_view context_text) {
  std::vector<std::string> words;
  for (auto& t : text::tokenize(context_text)) {
    if (t.size() < 4 || text::is_stopword(t)) continue;
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); })) continue;
    if (std::find(words.begin(), words.end(), t) == words.end()) words.push_back(t);
  }
  return words;
}

std::string product_noun(std::string_view title) {
  auto tokens = text::tokenize(title);
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    if (it->size() >= 3 && !text::is_stopword(*it) &&
        std::isalpha(static_cast<unsigned char>(it->front()))) {
      return *it;
    }
  }
  return "product";
}

std::string generate_suggestions(std::string_view prompt, std::uint64_t seed) {
  std::string block;
  try {
    block = promptkit::extract_data_block(prompt);
  } catch (const std::exception&) {
    return {};
  }
  const auto title = field_after(block, "Title: ");
  const auto body = field_after(block, "Text: ");
  const int k = requested_k(prompt);
  const auto noun = product_noun(title);
  auto words = topic_words(body);
  if (words.empty()) words.push_back(noun);

  DeterministicRng rng(prompt_seed(prompt, seed));
  rng.shuffle(words);

  struct Shape {
    const char* lead;
    const char* tail;
    const char* label;
  };
  static const Shape kShapes[] = {
      {"How does the ", " hold up after months of daily use?", "specific product aspect"},
      {"What are the key features of this ", "?", "broad features"},
      {"Is the ", " compatible with standard accessories?", "compatibility"},
      {"How does the ", " compare with similar models?", "comparison"},
      {"Is this a good choice for someone who needs ", "?", "buying guide"},
      {"How easy is the ", " to set up?", "specific product aspect"},
      {"Does the ", " work with other brands?", "compatibility"},
  };

  std::string out;
  const auto style = rng.below(10);
  if (style == 0) out += "Here are the top product questions for this item:\n\n";
  if (style == 1) out += "Question | Type | Score\n";
  for (int i = 0; i < k; ++i) {
    const auto& shape = kShapes[rng.below(std::size(kShapes))];
    std::string subject = std::strcmp(shape.label, "broad features") == 0
                              ? noun
                              : words[static_cast<std::size_t>(i) % words.size()];
    out += std::string(shape.lead) + subject + shape.tail + " | " + shape.label + " | " +
           std::to_string(1 + rng.below(10)) + "\n";
  }
  return out;
}

std::string judge_verdict(std::string_view prompt, std::uint64_t seed) {
  const auto dimension = field_after(prompt, promptkit::kJudgeMarker);
  const auto info_at = prompt.find(promptkit::kDataOpen);
  const auto question_at = prompt.rfind(promptkit::kJudgeQuestionLabel);
  std::string question, context;
  if (question_at != std::string_view::npos) {
    question = field_after(prompt.substr(question_at + 1), promptkit::kJudgeQuestionLabel.substr(1));
  }
  if (info_at != std::string_view::npos && question_at != std::string_view::npos && question_at > info_at) {
    context = field_after(prompt.substr(info_at, question_at - info_at), "Text: ");
  }

  DeterministicRng rng(prompt_seed(prompt, seed));
  if (rng.below(40) == 0) return "I cannot tell from the information given.";

  const auto lower = text::to_lower(dimension);
  if (lower == "answerability") {
    const double overlap = qparser::lexical_answerability(question, context);
    if (overlap >= 0.5) return "YES";
    return overlap >= 0.2 ? "PARTIAL" : "NO";
  }
  if (lower == "style") return qparser::lint_style(question).passes ? "YES" : "NO";
  return rng.below(10) < 8 ? "YES" : "NO";
}

}  // namespace

Responder make_synthetic_responder(std::uint64_t seed) {
  return [seed](const GenRequest& request) -> std::optional<std::string> {
    if (request.prompt.find(promptkit::kJudgeMarker) != std::string::npos) {
      return judge_verdict(request.prompt, seed);
    }
    auto out = generate_suggestions(request.prompt, seed);
    if (out.empty()) return std::nullopt;
    return out;
  };
}

}  // namespace qsuggest::backend
