#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/corpus.hpp"
#include "qsuggest/jsonl.hpp"
#include "qsuggest/qparser.hpp"

namespace qsuggest::sftexport {

enum class ReviewStatus { pending, approved, edited, rejected };

std::string_view to_string(ReviewStatus s);
ReviewStatus review_status_from_string(std::string_view s);

struct TrainingPair {
  std::string pair_id;
  std::string context_id;
  std::string context_text;
  std::string question;
  ReviewStatus status = ReviewStatus::pending;
  std::optional<std::string> edited_question;
  std::vector<std::string> lint_violations;
  std::string source_run;

  bool exportable() const { return status == ReviewStatus::approved || status == ReviewStatus::edited; }
  // The edited text for edited pairs, otherwise the generated question.
  const std::string& target() const;
};

json to_json(const TrainingPair& p);
TrainingPair pair_from_json(const json& j);
std::vector<TrainingPair> read_pairs(const std::filesystem::path& path);
std::string pairs_to_jsonl(const std::vector<TrainingPair>& pairs);

struct RunItem {
  corpus::ProductContext context;
  qparser::QuestionSuggestion suggestion;
  std::string run_id;
};

// Lowercased, whitespace-collapsed form used for deduplication.
std::string normalize_for_dedup(std::string_view s);

// One pending pair per distinct (normalized context, normalized question),
// ordered by pair_id. With lint_gate, pairs failing the style lint start out
// rejected with the violations recorded.
std::vector<TrainingPair> curate(const std::vector<RunItem>& run_output, bool lint_gate);

struct Decision {
  std::string pair_id;
  ReviewStatus status = ReviewStatus::pending;
  std::optional<std::string> edited_question;
};

// Decisions file: one JSON object per line {pair_id, status, edited_question?}.
std::vector<Decision> read_decisions(const std::filesystem::path& path);

struct ReviewOutcome {
  std::size_t applied = 0;
  std::vector<std::string> errors;  // one entry per decision that could not be applied
};

// Applies what it can; unknown ids and edits without text become error entries.
ReviewOutcome apply_review(std::vector<TrainingPair>& pairs, const std::vector<Decision>& decisions);

struct ExportConfig {
  double validation_ratio = 0.1;
  std::uint64_t seed = 13;
  std::string base_model_note = "Any instruction-following seq2seq or decoder model; not trained here.";
  std::vector<std::string> source_run_ids;
};

struct ExportResult {
  json manifest;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  std::vector<std::string> warnings;
};

// Writes train.jsonl, validation.jsonl ({input, target} per line) and
// manifest.json into out_dir. Validation gets floor(n * ratio) pairs after a
// seeded shuffle of the pairs ordered by pair_id. Throws ExportError when no
// pair is exportable.
ExportResult export_dataset(const std::vector<TrainingPair>& pairs, const ExportConfig& config,
                            const std::filesystem::path& out_dir);

}  // namespace qsuggest::sftexport
