#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsuggest/jsonl.hpp"
#include "qsuggest/promptkit.hpp"

namespace qsuggest::agreement {

using promptkit::Dimension;

enum class Label { yes, no };
enum class Annotator { human, automatic };

struct AnnotationRecord {
  std::string item_id;
  Dimension dimension = Dimension::relevance;
  Label label = Label::no;
  Annotator annotator = Annotator::human;
};

// Label text: yes, no, or partial (collapsed to no). Case-insensitive.
Label label_from_string(std::string_view s);
std::string_view to_string(Label l);
Annotator annotator_from_string(std::string_view s);  // "human" | "auto"
std::string_view to_string(Annotator a);

// CSV rows `item_id,dimension,label,annotator`; an optional header row, blank
// lines and '#' comments are skipped. Throws FormatError on bad rows and on a
// repeated (item_id, dimension, annotator).
std::vector<AnnotationRecord> parse_csv(std::string_view content, std::string_view source = "input");
std::vector<AnnotationRecord> load_csv(const std::filesystem::path& path);

struct DimensionAgreement {
  Dimension dimension = Dimension::relevance;
  std::size_t matches = 0;
  std::size_t total = 0;
  double percent = 0;
  // Cohen's kappa; an extra beyond raw agreement. Absent when chance agreement is 1.
  std::optional<double> kappa;
};

struct ExcludedPair {
  std::string item_id;
  Dimension dimension = Dimension::relevance;
};

struct AgreementReport {
  std::vector<DimensionAgreement> dimensions;  // fixed dimension order, only those with overlap
  std::optional<double> overall_percent;       // unweighted mean of dimension percents
  std::vector<ExcludedPair> excluded;          // (item, dimension) present on one side only
  std::vector<std::string> warnings;

  const DimensionAgreement* find(Dimension d) const;
};

// Pairs records on (item_id, dimension). The annotator field of the inputs is
// not consulted, so either list may come from any source.
AgreementReport percent_agreement(const std::vector<AnnotationRecord>& human,
                                  const std::vector<AnnotationRecord>& automatic);

// Splits a mixed record list by annotator before comparing.
AgreementReport percent_agreement(const std::vector<AnnotationRecord>& mixed);

json to_json(const AgreementReport& report);
std::string render_text(const AgreementReport& report);

}  // namespace qsuggest::agreement
