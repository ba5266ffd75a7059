#include "qsuggest/promptkit.hpp"

#include "qsuggest/embedded_data.hpp"
#include "qsuggest/errors.hpp"
#include "qsuggest/jsonl.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::promptkit {
namespace {

constexpr std::string_view kHumanTurn = "Human: ";
constexpr std::string_view kSingleQuestion = "the top product question";
constexpr std::string_view kDataClose = ".\nAssistant:";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string apply_frame(std::string body, RoleFrame frame) {
  if (frame == RoleFrame::human_assistant) return body;
  if (text::starts_with(body, kHumanTurn)) body.erase(0, kHumanTurn.size());
  if (text::ends_with(body, kAssistantTurn)) body.resize(body.size() - kAssistantTurn.size());
  return body;
}

std::pair<std::size_t, std::size_t> data_span(std::string_view prompt) {
  auto open = prompt.rfind(kDataOpen);
  if (open == std::string_view::npos) throw FormatError("prompt has no Product Info block");
  std::size_t begin = open + kDataOpen.size();
  std::size_t end = 0;
  if (text::ends_with(prompt, kDataClose)) {
    end = prompt.size() - kDataClose.size();
  } else if (text::ends_with(prompt, ".")) {
    end = prompt.size() - 1;
  } else {
    throw FormatError("prompt does not end with the data block terminator");
  }
  if (end < begin) throw FormatError("malformed data block");
  return {begin, end};
}

}  // namespace

void PromptTemplate::validate() const {
  if (count_occurrences(body, kPlaceholder) != 1) {
    throw ContractViolation("template '" + template_id + "' must contain exactly one {data}");
  }
}

void GenConfig::validate() const {
  if (k_questions < 1 || k_questions > 10) throw ContractViolation("k_questions must be in [1, 10]");
  if (temperature < 0) throw ContractViolation("temperature must be non-negative");
  if (max_tokens < 1) throw ContractViolation("max_tokens must be positive");
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::relevance: return "relevance";
    case Dimension::usefulness: return "usefulness";
    case Dimension::answerability: return "answerability";
    case Dimension::fluency: return "fluency";
    case Dimension::style: return "style";
  }
  throw ContractViolation("unknown dimension");
}

Dimension dimension_from_string(std::string_view s) {
  auto lower = text::to_lower(text::trim(s));
  for (auto d : kAllDimensions) {
    if (lower == to_string(d)) return d;
  }
  throw FormatError("unknown dimension '" + std::string(s) + "'");
}

const PromptTemplate& generation_template() {
  static const PromptTemplate kTemplate = [] {
    PromptTemplate t{"generation-v1", std::string(data::generation_prompt()),
                     RoleFrame::human_assistant};
    t.validate();
    return t;
  }();
  return kTemplate;
}

PromptTemplate load_template(const std::filesystem::path& path, RoleFrame frame) {
  PromptTemplate t{path.stem().string(), io::read_file(path), frame};
  t.validate();
  return t;
}

std::string render_data_block(const corpus::ProductContext& context) {
  return "Title: " + text::normalize_whitespace(context.product_title) +
         "\nSource: " + std::string(corpus::to_string(context.source)) +
         "\nText: " + text::normalize_whitespace(context.text);
}

std::string render_generation_prompt(const corpus::ProductContext& context, const GenConfig& config,
                                     const PromptTemplate& tmpl) {
  config.validate();
  tmpl.validate();
  if (text::trim(context.text).empty()) throw ContractViolation("context text is empty");
  const auto budget = text::estimate_tokens(context.text.size());
  if (budget > static_cast<std::size_t>(config.max_tokens)) {
    throw OversizeError("context " + context.context_id + " needs ~" + std::to_string(budget) +
                        " tokens, budget is " + std::to_string(config.max_tokens));
  }

  std::string body = tmpl.body;
  if (config.k_questions > 1) {
    replace_all(body, kSingleQuestion,
                "the top " + std::to_string(config.k_questions) + " product questions");
  }

  if (!config.few_shot.empty()) {
    auto placeholder = body.find(kPlaceholder);
    auto line_start = body.rfind('\n', placeholder);
    line_start = line_start == std::string::npos ? 0 : line_start + 1;
    std::string examples;
    for (const auto& ex : config.few_shot) {
      examples += "Product Info: " + text::normalize_whitespace(ex.context_text) + ".\nAssistant: " +
                  std::string(text::trim(ex.rendered_output)) + "\n\n";
    }
    body.insert(line_start, examples);
  }

  auto placeholder = body.find(kPlaceholder);
  body.replace(placeholder, kPlaceholder.size(), render_data_block(context));
  return apply_frame(std::move(body), tmpl.role_frame);
}

std::string extract_data_block(std::string_view prompt) {
  auto [begin, end] = data_span(prompt);
  return std::string(prompt.substr(begin, end - begin));
}

std::string strip_data_block(std::string_view prompt) {
  auto [begin, end] = data_span(prompt);
  std::string out(prompt);
  out.replace(begin, end - begin, kPlaceholder);
  return out;
}

std::string_view dimension_definition(Dimension d) {
  switch (d) {
    case Dimension::relevance:
      return "The question should be applicable and appropriate with respect to the product under "
             "consideration and its features.";
    case Dimension::usefulness:
      return "The product question (and it's corresponding answer) should provide helpful "
             "information to customers, that can benefit them in deciding whether or not to "
             "purchase the product.";
    case Dimension::answerability:
      return "The answer to the generated product question must be present in its input context "
             "(review or catalog snippet).";
    case Dimension::fluency:
      return "The generated question should be grammatically correct, fluent, coherent and easily "
             "understandable in general.";
    case Dimension::style:
      return "The generated question should mimic a customer's inquiry style. It must read as a "
             "question a customer may ask a shopping assistant, not as a clarification or "
             "preference question an assistant might ask a customer.";
  }
  throw ContractViolation("unknown dimension");
}

std::string render_judge_prompt(std::string_view question, const corpus::ProductContext& context,
                                Dimension dimension) {
  auto q = text::normalize_whitespace(question);
  if (q.empty()) throw ContractViolation("judge prompt needs a non-empty question");

  std::string name(to_string(dimension));
  name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));

  std::string verdict_instruction;
  if (dimension == Dimension::answerability) {
    verdict_instruction =
        "Is the answer to the question contained in the Product Info? Reply with exactly one word: "
        "YES if the full answer is contained, PARTIAL if only part of the answer is contained, or "
        "NO if it is not contained.";
  } else {
    verdict_instruction =
        "Does the question satisfy this criterion? Reply with exactly one word: YES or NO.";
  }

  std::string prompt;
  prompt += "Human: You are reviewing a product question suggested to customers of a shopping "
            "assistant. Judge the question on a single criterion.\n\n";
  prompt += std::string(kJudgeMarker) + name + "\n";
  prompt += "Definition: " + std::string(dimension_definition(dimension)) + "\n\n";
  prompt += "Product Info: " + render_data_block(context) + "\n";
  prompt += std::string(kJudgeQuestionLabel.substr(1)) + q + "\n\n";
  prompt += verdict_instruction + "\n";
  prompt += "Assistant:";
  return prompt;
}

}  // namespace qsuggest::promptkit
