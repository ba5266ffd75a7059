#include "qsuggest/sftexport.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qsuggest/deterministic_rng.hpp"
#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::sftexport {

std::string_view to_string(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::pending: return "pending";
    case ReviewStatus::approved: return "approved";
    case ReviewStatus::edited: return "edited";
    case ReviewStatus::rejected: return "rejected";
  }
  return "pending";
}

ReviewStatus review_status_from_string(std::string_view s) {
  if (s == "pending") return ReviewStatus::pending;
  if (s == "approved") return ReviewStatus::approved;
  if (s == "edited") return ReviewStatus::edited;
  if (s == "rejected") return ReviewStatus::rejected;
  throw FormatError("unknown review status '" + std::string(s) + "'");
}

const std::string& TrainingPair::target() const {
  return status == ReviewStatus::edited && edited_question ? *edited_question : question;
}

json to_json(const TrainingPair& p) {
  json j = {{"pair_id", p.pair_id},
            {"context_id", p.context_id},
            {"context_text", p.context_text},
            {"question", p.question},
            {"review_status", to_string(p.status)},
            {"lint_violations", p.lint_violations},
            {"source_run", p.source_run}};
  if (p.edited_question) j["edited_question"] = *p.edited_question;
  return j;
}

TrainingPair pair_from_json(const json& j) {
  try {
    TrainingPair p;
    p.pair_id = j.at("pair_id").get<std::string>();
    p.context_id = j.value("context_id", "");
    p.context_text = j.at("context_text").get<std::string>();
    p.question = j.at("question").get<std::string>();
    p.status = review_status_from_string(j.value("review_status", "pending"));
    if (j.contains("edited_question") && !j["edited_question"].is_null()) {
      p.edited_question = j["edited_question"].get<std::string>();
    }
    p.lint_violations = j.value("lint_violations", std::vector<std::string>{});
    p.source_run = j.value("source_run", "");
    if (p.status == ReviewStatus::edited && !p.edited_question) {
      throw FormatError("pair " + p.pair_id + " is edited but has no edited_question");
    }
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad training pair record: ") + e.what());
  }
}

std::vector<TrainingPair> read_pairs(const std::filesystem::path& path) {
  std::vector<TrainingPair> pairs;
  for (const auto& j : io::read_jsonl(path)) pairs.push_back(pair_from_json(j));
  return pairs;
}

std::string pairs_to_jsonl(const std::vector<TrainingPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) out += io::dump_compact(to_json(p)) + "\n";
  return out;
}

std::string normalize_for_dedup(std::string_view s) {
  return text::to_lower(text::normalize_whitespace(s));
}

std::vector<TrainingPair> curate(const std::vector<RunItem>& run_output, bool lint_gate) {
  std::map<std::string, TrainingPair> by_id;
  for (const auto& item : run_output) {
    const auto id = text::short_id({normalize_for_dedup(item.context.text),
                                    normalize_for_dedup(item.suggestion.question)});
    if (by_id.count(id)) continue;
    TrainingPair p;
    p.pair_id = id;
    p.context_id = item.context.context_id;
    p.context_text = item.context.text;
    p.question = item.suggestion.question;
    p.source_run = item.run_id;
    if (lint_gate) {
      auto style = qparser::lint_style(item.suggestion.question, item.context.product_title);
      if (!style.passes) {
        p.status = ReviewStatus::rejected;
        for (auto v : style.violations) {
          if (v != qparser::StyleViolation::missing_anaphora_opportunity) {
            p.lint_violations.emplace_back(qparser::to_string(v));
          }
        }
      }
    }
    by_id.emplace(id, std::move(p));
  }
  std::vector<TrainingPair> out;
  out.reserve(by_id.size());
  for (auto& [id, p] : by_id) out.push_back(std::move(p));
  return out;
}

std::vector<Decision> read_decisions(const std::filesystem::path& path) {
  std::vector<Decision> out;
  for (const auto& j : io::read_jsonl(path)) {
    try {
      Decision d;
      d.pair_id = j.at("pair_id").get<std::string>();
      d.status = review_status_from_string(j.at("status").get<std::string>());
      if (j.contains("edited_question") && !j["edited_question"].is_null()) {
        d.edited_question = j["edited_question"].get<std::string>();
      }
      out.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw FormatError(path.filename().string() + ": bad decision record: " + e.what());
    }
  }
  return out;
}

ReviewOutcome apply_review(std::vector<TrainingPair>& pairs, const std::vector<Decision>& decisions) {
  std::map<std::string, TrainingPair*> index;
  for (auto& p : pairs) index[p.pair_id] = &p;

  ReviewOutcome outcome;
  for (const auto& d : decisions) {
    auto it = index.find(d.pair_id);
    if (it == index.end()) {
      outcome.errors.push_back("unknown pair_id " + d.pair_id);
      continue;
    }
    if (d.status == ReviewStatus::edited) {
      if (!d.edited_question || text::trim(*d.edited_question).empty()) {
        outcome.errors.push_back("edit for " + d.pair_id + " has no edited_question");
        continue;
      }
      it->second->edited_question = std::string(text::trim(*d.edited_question));
    }
    it->second->status = d.status;
    ++outcome.applied;
  }
  return outcome;
}

ExportResult export_dataset(const std::vector<TrainingPair>& pairs, const ExportConfig& config,
                            const std::filesystem::path& out_dir) {
  if (config.validation_ratio < 0 || config.validation_ratio >= 1) {
    throw ContractViolation("validation ratio must lie in [0, 1)");
  }
  std::vector<const TrainingPair*> selected;
  for (const auto& p : pairs) {
    if (p.exportable()) selected.push_back(&p);
  }
  if (selected.empty()) throw ExportError("no approved or edited pairs to export");
  std::sort(selected.begin(), selected.end(),
            [](const TrainingPair* a, const TrainingPair* b) { return a->pair_id < b->pair_id; });
  DeterministicRng rng(config.seed);
  rng.shuffle(selected);

  // The epsilon absorbs products like 0.1 * 30 landing just under an integer.
  const auto validation_count = static_cast<std::size_t>(
      std::floor(static_cast<double>(selected.size()) * config.validation_ratio + 1e-9));

  ExportResult result;
  result.validation_count = validation_count;
  result.train_count = selected.size() - validation_count;
  if (validation_count == 0 && config.validation_ratio > 0) {
    result.warnings.push_back("validation split is empty for " + std::to_string(selected.size()) +
                              " exportable pair(s)");
  }

  std::string train, validation;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto line = io::dump_compact({{"input", selected[i]->context_text}, {"target", selected[i]->target()}}) + "\n";
    (i < validation_count ? validation : train) += line;
  }
  io::write_file_atomic(out_dir / "train.jsonl", train);
  io::write_file_atomic(out_dir / "validation.jsonl", validation);

  std::size_t rejected = 0, pending = 0;
  for (const auto& p : pairs) {
    rejected += p.status == ReviewStatus::rejected;
    pending += p.status == ReviewStatus::pending;
  }
  result.manifest = {
      {"pair_count", selected.size()},
      {"split_ratios", {{"train", 1.0 - config.validation_ratio}, {"validation", config.validation_ratio}}},
      {"split_counts", {{"train", result.train_count}, {"validation", result.validation_count}}},
      {"seed", config.seed},
      {"base_model_note", config.base_model_note},
      {"recorded_hyperparameters",
       {{"epochs", 8}, {"learning_rate", 1e-5}, {"note", "informational only; no training is run"}}},
      {"input_format", "bare_context"},
      {"input_format_note",
       "input is the context text alone; wrapping it in the generation instruction is an alternative "
       "left to the trainer"},
      {"source_run_ids", config.source_run_ids},
      {"excluded", {{"rejected", rejected}, {"pending", pending}}},
      {"files",
       {{"train.jsonl", text::sha256_hex(train)}, {"validation.jsonl", text::sha256_hex(validation)}}},
      {"warnings", result.warnings}};
  io::write_file_atomic(out_dir / "manifest.json", io::dump_pretty(result.manifest));
  return result;
}

}  // namespace qsuggest::sftexport
