#include "qsuggest/qparser.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>

#include "qsuggest/embedded_data.hpp"
#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::qparser {
namespace {

std::string normalize_label(std::string_view label) {
  std::string s = text::to_lower(label);
  for (auto& c : s) {
    if (c == '_' || c == '-') c = ' ';
  }
  return text::normalize_whitespace(s);
}

const std::unordered_map<std::string, QuestionType>& synonym_table() {
  static const std::unordered_map<std::string, QuestionType> kTable = [] {
    std::unordered_map<std::string, QuestionType> table;
    std::string_view all = data::question_types();
    while (!all.empty()) {
      auto nl = all.find('\n');
      auto line = all.substr(0, nl);
      all = nl == std::string_view::npos ? std::string_view{} : all.substr(nl + 1);
      if (text::trim(line).empty() || line.front() == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string_view::npos) continue;
      table.emplace(normalize_label(line.substr(0, tab)), type_from_id(text::trim(line.substr(tab + 1))));
    }
    return table;
  }();
  return kTable;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto bar = line.find('|', start);
    fields.push_back(text::trim(line.substr(start, bar == std::string_view::npos ? bar : bar - start)));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return fields;
}

bool is_table_rule(std::string_view line) {
  bool has_dash = false;
  for (char c : line) {
    if (c == '-') has_dash = true;
    else if (c != '|' && c != ':' && c != ' ' && c != '\t') return false;
  }
  return has_dash;
}

// Strict integer: optional sign then digits only.
std::optional<long long> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_header(const std::vector<std::string_view>& fields) {
  if (fields.size() != 3) return false;
  auto first = text::to_lower(fields.front());
  auto last = text::to_lower(fields.back());
  return first.find("question") != std::string::npos && last.find("score") != std::string::npos &&
         !parse_int(fields.back());
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

std::string_view type_id(QuestionType t) {
  switch (t) {
    case QuestionType::broad_features: return "broad_features";
    case QuestionType::specific_aspect: return "specific_aspect";
    case QuestionType::compatibility: return "compatibility";
    case QuestionType::comparison: return "comparison";
    case QuestionType::buying_guide: return "buying_guide";
    case QuestionType::other: return "other";
  }
  return "other";
}

QuestionType type_from_id(std::string_view id) {
  for (auto t : kAllQuestionTypes) {
    if (type_id(t) == id) return t;
  }
  throw FormatError("unknown question type id '" + std::string(id) + "'");
}

std::string_view type_label(QuestionType t) {
  switch (t) {
    case QuestionType::broad_features: return "broad features";
    case QuestionType::specific_aspect: return "specific product aspect";
    case QuestionType::compatibility: return "compatibility";
    case QuestionType::comparison: return "comparison";
    case QuestionType::buying_guide: return "buying guide";
    case QuestionType::other: return "other";
  }
  return "other";
}

QuestionType match_question_type(std::string_view label) {
  const auto& table = synonym_table();
  auto it = table.find(normalize_label(label));
  return it == table.end() ? QuestionType::other : it->second;
}

bool QuestionSuggestion::valid() const {
  if (question.empty() || question != text::trim(question) || question.back() != '?') return false;
  if (question.find_first_of("|\n\r") != std::string::npos) return false;
  return interest_score >= 1 && interest_score <= 10;
}

std::string suggestion_ref(const QuestionSuggestion& s) {
  return text::short_id({s.context_id, s.question});
}

json to_json(const QuestionSuggestion& s) {
  return json{{"suggestion_ref", suggestion_ref(s)},
              {"context_id", s.context_id},
              {"question", s.question},
              {"question_type", type_id(s.question_type)},
              {"interest_score", s.interest_score},
              {"raw_line", s.raw_line}};
}

QuestionSuggestion suggestion_from_json(const json& j) {
  try {
    QuestionSuggestion s;
    s.question = j.at("question").get<std::string>();
    s.question_type = type_from_id(j.at("question_type").get<std::string>());
    s.interest_score = j.at("interest_score").get<int>();
    s.context_id = j.at("context_id").get<std::string>();
    s.raw_line = j.value("raw_line", "");
    if (!s.valid()) throw FormatError("invalid suggestion record: " + s.question);
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad suggestion record: ") + e.what());
  }
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::preamble: return "preamble";
    case RejectReason::header: return "header";
    case RejectReason::wrong_field_count: return "wrong_field_count";
    case RejectReason::empty_question: return "empty_question";
    case RejectReason::not_a_question: return "not_a_question";
    case RejectReason::bad_score: return "bad_score";
    case RejectReason::score_out_of_range: return "score_out_of_range";
    case RejectReason::trailing_text: return "trailing_text";
  }
  return "unknown";
}

ParseReport parse_suggestions(std::string_view raw, std::string_view context_id) {
  ParseReport report;
  bool seen_valid = false;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    // "\r\n", "\n" and a lone "\r" all end a line.
    auto nl = raw.find_first_of("\r\n", pos);
    auto line = raw.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? raw.size() : nl + 1;
    if (nl != std::string_view::npos && raw[nl] == '\r' && pos < raw.size() && raw[pos] == '\n') ++pos;

    auto body = text::trim(line);
    if (body.empty()) continue;
    auto reject = [&](RejectReason reason) {
      report.rejected_lines.push_back({std::string(line), reason});
    };

    if (body.find('|') == std::string_view::npos) {
      reject(seen_valid ? RejectReason::trailing_text : RejectReason::preamble);
      continue;
    }
    if (is_table_rule(body)) {
      reject(RejectReason::header);
      continue;
    }
    auto fields = split_fields(body);
    // Markdown rows carry outer bars, sometimes only one of them. An empty
    // edge field only counts as a bar when there are too many fields.
    if (fields.size() > 3 && fields.front().empty()) fields.erase(fields.begin());
    if (fields.size() > 3 && fields.back().empty()) fields.pop_back();
    if (is_header(fields)) {
      reject(RejectReason::header);
      continue;
    }
    if (fields.size() != 3) {
      reject(RejectReason::wrong_field_count);
      continue;
    }
    if (fields[0].empty()) {
      reject(RejectReason::empty_question);
      continue;
    }
    if (fields[0].back() != '?') {
      reject(RejectReason::not_a_question);
      continue;
    }
    auto score = parse_int(fields[2]);
    if (!score) {
      reject(RejectReason::bad_score);
      continue;
    }
    if (*score < 1 || *score > 10) {
      reject(RejectReason::score_out_of_range);
      continue;
    }

    QuestionSuggestion s;
    s.question = std::string(fields[0]);
    s.question_type = match_question_type(fields[1]);
    s.interest_score = static_cast<int>(*score);
    s.context_id = std::string(context_id);
    s.raw_line = std::string(line);
    report.suggestions.push_back(std::move(s));
    seen_valid = true;
  }
  return report;
}

json to_json(const ParseReport& report, std::string_view context_id) {
  json rejected = json::array();
  for (const auto& r : report.rejected_lines) {
    rejected.push_back({{"line", r.line}, {"reason", to_string(r.reason)}});
  }
  return json{{"context_id", context_id},
              {"accepted", report.suggestions.size()},
              {"rejected", rejected}};
}

std::string render_suggestion_line(const QuestionSuggestion& s) {
  if (!s.valid()) throw ContractViolation("cannot render an invalid suggestion");
  return s.question + " | " + std::string(type_label(s.question_type)) + " | " +
         std::to_string(s.interest_score);
}

std::string_view to_string(StyleViolation v) {
  switch (v) {
    case StyleViolation::first_person_pronoun: return "first_person_pronoun";
    case StyleViolation::second_person_pronoun: return "second_person_pronoun";
    case StyleViolation::preference_elicitation: return "preference_elicitation";
    case StyleViolation::not_a_question: return "not_a_question";
    case StyleViolation::missing_anaphora_opportunity: return "missing_anaphora_opportunity";
  }
  return "unknown";
}

bool StyleReport::has(StyleViolation v) const {
  return std::find(violations.begin(), violations.end(), v) != violations.end();
}

StyleReport lint_style(std::string_view question, std::string_view product_title) {
  static const std::vector<std::string_view> kFirstPerson = {"i", "me", "my", "mine", "we", "us", "our", "ours"};
  static const std::vector<std::string_view> kSecondPerson = {"you", "your", "yours"};
  static const std::vector<std::string_view> kPreference = {"do you prefer", "would you like",
                                                            "what do you think", "do you want"};

  const auto tokens = text::tokenize(question);
  auto contains_any = [&](const std::vector<std::string_view>& words) {
    return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
      return std::find(words.begin(), words.end(), t) != words.end();
    });
  };

  StyleReport report;
  if (contains_any(kFirstPerson)) report.violations.push_back(StyleViolation::first_person_pronoun);
  if (contains_any(kSecondPerson)) report.violations.push_back(StyleViolation::second_person_pronoun);

  std::string joined = " ";
  for (const auto& t : tokens) joined += t + " ";
  for (auto pattern : kPreference) {
    if (joined.find(" " + std::string(pattern) + " ") != std::string::npos) {
      report.violations.push_back(StyleViolation::preference_elicitation);
      break;
    }
  }

  auto trimmed = text::trim(question);
  if (trimmed.empty() || trimmed.back() != '?') report.violations.push_back(StyleViolation::not_a_question);

  auto title = text::to_lower(text::normalize_whitespace(product_title));
  if (!title.empty() &&
      count_occurrences(text::to_lower(text::normalize_whitespace(question)), title) >= 2) {
    report.violations.push_back(StyleViolation::missing_anaphora_opportunity);
  }

  report.passes = std::all_of(report.violations.begin(), report.violations.end(), [](StyleViolation v) {
    return v == StyleViolation::missing_anaphora_opportunity;
  });
  return report;
}

double lexical_answerability(std::string_view question, std::string_view context_text) {
  const auto q = text::content_stems(question);
  if (q.empty()) return 0.0;
  const auto c = text::content_stems(context_text);
  std::size_t shared = 0;
  for (const auto& s : q) shared += c.count(s);
  return static_cast<double>(shared) / static_cast<double>(q.size());
}

double lexical_answerability(std::string_view question, const corpus::ProductContext& context) {
  return lexical_answerability(question, context.text);
}

std::string question_types_digest() { return text::sha256_hex(data::question_types()); }
std::string stopwords_digest() { return text::sha256_hex(data::stopwords()); }

}  // namespace qsuggest::qparser
