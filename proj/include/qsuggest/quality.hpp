#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/backend.hpp"
#include "qsuggest/corpus.hpp"
#include "qsuggest/promptkit.hpp"
#include "qsuggest/qparser.hpp"

namespace qsuggest::quality {

using promptkit::Dimension;

enum class Verdict { yes, partial, no };
enum class Variant { icl_zero_shot, icl_few_shot, sft };

inline constexpr std::array<Variant, 3> kAllVariants = {Variant::icl_zero_shot, Variant::icl_few_shot,
                                                        Variant::sft};

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);
std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);
// Column heading, e.g. "ICL (zero-shot)".
std::string_view column_label(Variant v);

enum class UnmappablePolicy { count_as_no, exclude };

std::string_view to_string(UnmappablePolicy p);
UnmappablePolicy unmappable_policy_from_string(std::string_view s);

struct QualityVerdict {
  std::string suggestion_ref;
  Dimension dimension = Dimension::relevance;
  Variant variant = Variant::icl_zero_shot;
  // When the judge reply held no usable token, mapped is false and verdict is no.
  Verdict verdict = Verdict::no;
  bool mapped = true;
  std::string judge_model;
  std::string raw_response;
};

// Log record; the raw response is kept as a digest.
json to_json(const QualityVerdict& v);
QualityVerdict verdict_from_json(const json& j);

// First whole-word YES, PARTIAL or NO, case-insensitive. PARTIAL is only legal
// for answerability; anything else is unmappable (nullopt).
std::optional<Verdict> map_verdict(std::string_view response, Dimension dimension);

struct JudgeOptions {
  std::string model_id = "mock-judge";
  double temperature = 0.0;
  int max_tokens = 16;
};

// Renders the judge prompt, calls the generator and maps the reply. Backend
// errors are rethrown with the suggestion_ref in the message.
QualityVerdict judge(const qparser::QuestionSuggestion& suggestion,
                     const corpus::ProductContext& context, Dimension dimension, Variant variant,
                     backend::Generator& generator, const JudgeOptions& options = {});

struct JudgeItem {
  qparser::QuestionSuggestion suggestion;
  corpus::ProductContext context;
  Variant variant = Variant::icl_zero_shot;
};

// Judges every item on every dimension with up to `parallelism` workers. The
// result order is item-major, dimension-minor regardless of scheduling.
std::vector<QualityVerdict> judge_all(const std::vector<JudgeItem>& items,
                                      const std::vector<Dimension>& dimensions,
                                      backend::Generator& generator, const JudgeOptions& options,
                                      std::size_t parallelism = 1);

struct CellStats {
  std::size_t yes = 0;
  std::size_t partial = 0;
  std::size_t no = 0;
  std::size_t unmappable = 0;
  std::size_t n = 0;  // denominator after the unmappable policy
  std::optional<double> score;
  // partial / (partial + no), answerability only.
  std::optional<double> partial_among_negative;
};

struct QualityTable {
  UnmappablePolicy policy = UnmappablePolicy::count_as_no;
  // Only cells that received verdicts are present.
  std::map<std::pair<Variant, Dimension>, CellStats> cells;

  const CellStats* cell(Variant v, Dimension d) const;
  std::optional<double> score(Variant v, Dimension d) const;
};

QualityTable aggregate(const std::vector<QualityVerdict>& verdicts,
                       UnmappablePolicy policy = UnmappablePolicy::count_as_no);

struct DiversityReport {
  double length_diversity = 1.0;
  double lexical_diversity = 1.0;
  double aspect_diversity = 1.0;
  double overall = 1.0;
  std::size_t list_size = 0;
};

// Length bins: short <= 8 tokens, medium 9-16, long >= 17.
enum class LengthBin { short_q, medium_q, long_q };
LengthBin length_bin(std::string_view question);

// Throws ContractViolation on an empty list.
DiversityReport diversity(const std::vector<std::string>& questions);
DiversityReport diversity(const std::vector<qparser::QuestionSuggestion>& list);

inline constexpr double kDiversityTarget = 0.75;

struct ReportDocument {
  json machine;
  std::string text;
};

ReportDocument report(const QualityTable& table, const std::vector<DiversityReport>& diversity,
                      const std::map<std::string, std::string>& digests = {});

// The Table-1-shaped text block alone.
std::string render_table(const QualityTable& table);

}  // namespace qsuggest::quality
