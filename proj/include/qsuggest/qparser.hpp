#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/corpus.hpp"
#include "qsuggest/jsonl.hpp"

namespace qsuggest::qparser {

enum class QuestionType { broad_features, specific_aspect, compatibility, comparison, buying_guide, other };

inline constexpr std::array<QuestionType, 6> kAllQuestionTypes = {
    QuestionType::broad_features, QuestionType::specific_aspect, QuestionType::compatibility,
    QuestionType::comparison,     QuestionType::buying_guide,    QuestionType::other};

// Identifier form, e.g. "specific_aspect".
std::string_view type_id(QuestionType t);
QuestionType type_from_id(std::string_view id);

// Label written in output lines, e.g. "specific product aspect".
std::string_view type_label(QuestionType t);

// Case-insensitive lookup in the shipped synonym table (data/question_types.tsv).
// '_' and '-' count as spaces. Unknown labels map to `other`.
QuestionType match_question_type(std::string_view label);

struct QuestionSuggestion {
  std::string question;  // non-empty, trimmed, ends with '?', no '|' or line breaks
  QuestionType question_type = QuestionType::other;
  int interest_score = 1;  // 1..10
  std::string context_id;
  std::string raw_line;

  bool valid() const;
};

// Stable handle for a suggestion: short hash of (context_id, question).
std::string suggestion_ref(const QuestionSuggestion& s);

json to_json(const QuestionSuggestion& s);
QuestionSuggestion suggestion_from_json(const json& j);

enum class RejectReason {
  preamble,            // prose before the first valid line
  header,              // column header or table rule
  wrong_field_count,   // not exactly three '|'-separated fields
  empty_question,
  not_a_question,      // question field lacks a terminal '?'
  bad_score,           // score is not an integer
  score_out_of_range,  // integer outside [1, 10]
  trailing_text,       // prose after the first valid line
};

std::string_view to_string(RejectReason r);

struct RejectedLine {
  std::string line;
  RejectReason reason;
};

struct ParseReport {
  std::vector<QuestionSuggestion> suggestions;
  std::vector<RejectedLine> rejected_lines;
};

// Never throws on any input. Every non-blank line lands in exactly one of the
// two lists. Scores outside [1, 10] are rejected, not clamped.
ParseReport parse_suggestions(std::string_view raw, std::string_view context_id);

json to_json(const ParseReport& report, std::string_view context_id);

// "{question} | {type label} | {score}"
std::string render_suggestion_line(const QuestionSuggestion& s);

enum class StyleViolation {
  first_person_pronoun,
  second_person_pronoun,
  preference_elicitation,
  not_a_question,
  missing_anaphora_opportunity,  // advisory only
};

std::string_view to_string(StyleViolation v);

struct StyleReport {
  bool passes = true;
  std::vector<StyleViolation> violations;

  bool has(StyleViolation v) const;
};

// Deterministic style checks. When a product title is given, naming the
// product verbatim two or more times is reported as an advisory.
StyleReport lint_style(std::string_view question, std::string_view product_title = {});

// |shared content stems| / |question content stems|, 0 when the question has
// no content words.
double lexical_answerability(std::string_view question, std::string_view context_text);
double lexical_answerability(std::string_view question, const corpus::ProductContext& context);

// Digests of the shipped data files, recorded in evaluation reports.
std::string question_types_digest();
std::string stopwords_digest();

}  // namespace qsuggest::qparser
