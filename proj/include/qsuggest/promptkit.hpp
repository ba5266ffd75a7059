#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/corpus.hpp"

namespace qsuggest::promptkit {

enum class RoleFrame { human_assistant, plain };

struct PromptTemplate {
  std::string template_id;
  std::string body;  // exactly one "{data}" placeholder
  RoleFrame role_frame = RoleFrame::human_assistant;

  // Throws ContractViolation unless the body has exactly one placeholder.
  void validate() const;
};

struct FewShotExample {
  std::string context_text;
  std::string rendered_output;  // pipe-separated suggestion lines
};

struct GenConfig {
  int k_questions = 3;
  std::vector<FewShotExample> few_shot;
  double temperature = 0.7;
  int max_tokens = 512;

  void validate() const;
};

enum class Dimension { relevance, usefulness, answerability, fluency, style };

inline constexpr std::array<Dimension, 5> kAllDimensions = {
    Dimension::relevance, Dimension::usefulness, Dimension::answerability, Dimension::fluency,
    Dimension::style};

std::string_view to_string(Dimension d);
Dimension dimension_from_string(std::string_view s);

inline constexpr std::string_view kPlaceholder = "{data}";
inline constexpr std::string_view kDataOpen = "\nProduct Info: ";
inline constexpr std::string_view kAssistantTurn = "\nAssistant:";

// The stock generation prompt, byte-identical to data/generation_prompt.txt.
const PromptTemplate& generation_template();

// Reads a replacement template from disk (template override).
PromptTemplate load_template(const std::filesystem::path& path,
                             RoleFrame frame = RoleFrame::human_assistant);

// "Title: {title}\nSource: {source}\nText: {text}"
std::string render_data_block(const corpus::ProductContext& context);

// Fills the template. With k > 1, "the top product question" becomes
// "the top {k} product questions". Few-shot examples are inserted before the
// final "Product Info:" line as "Product Info: ...\nAssistant: ..." blocks.
// Throws ContractViolation on empty context text and OversizeError when the
// context alone exceeds config.max_tokens (estimated at 4 chars per token).
std::string render_generation_prompt(const corpus::ProductContext& context, const GenConfig& config,
                                     const PromptTemplate& tmpl = generation_template());

// Inverse of the fill: the data block of a rendered prompt, and the prompt with
// that block put back to "{data}". Both throw FormatError if the delimiters
// are missing.
std::string extract_data_block(std::string_view prompt);
std::string strip_data_block(std::string_view prompt);

// Definition of one quality dimension, as stated in the generation criteria.
std::string_view dimension_definition(Dimension d);

// Quotes the question and the full context, states one dimension, and asks for
// a one-word verdict: YES/NO, or YES/PARTIAL/NO for answerability.
std::string render_judge_prompt(std::string_view question, const corpus::ProductContext& context,
                                Dimension dimension);

inline constexpr std::string_view kJudgeMarker = "Criterion: ";
inline constexpr std::string_view kJudgeQuestionLabel = "\nQuestion: ";

}  // namespace qsuggest::promptkit
