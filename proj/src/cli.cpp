#include "qsuggest/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "qsuggest/agreement.hpp"
#include "qsuggest/backend.hpp"
#include "qsuggest/config.hpp"
#include "qsuggest/corpus.hpp"
#include "qsuggest/errors.hpp"
#include "qsuggest/http_server.hpp"
#include "qsuggest/promptkit.hpp"
#include "qsuggest/qparser.hpp"
#include "qsuggest/quality.hpp"
#include "qsuggest/service.hpp"
#include "qsuggest/sftexport.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::cli {
namespace fs = std::filesystem;
namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception
// wins and is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

void write_text(const fs::path& path, std::string_view content) { io::write_file_atomic(path, content); }

std::vector<qparser::QuestionSuggestion> read_suggestions(const fs::path& path) {
  std::vector<qparser::QuestionSuggestion> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(qparser::suggestion_from_json(j));
  return out;
}

std::map<std::string, corpus::ProductContext> index_contexts(const std::vector<corpus::ProductContext>& contexts) {
  std::map<std::string, corpus::ProductContext> out;
  for (const auto& c : contexts) out.emplace(c.context_id, c);
  return out;
}

// Diversity is measured over each context's own suggestion list.
std::vector<quality::DiversityReport> diversity_per_context(
    const std::vector<qparser::QuestionSuggestion>& suggestions) {
  std::map<std::string, std::vector<qparser::QuestionSuggestion>> lists;
  for (const auto& s : suggestions) lists[s.context_id].push_back(s);
  std::vector<quality::DiversityReport> out;
  for (const auto& [id, list] : lists) out.push_back(quality::diversity(list));
  return out;
}

std::map<std::string, std::string> data_digests() {
  return {{"generation_prompt", text::sha256_hex(promptkit::generation_template().body)},
          {"question_types", qparser::question_types_digest()},
          {"stopwords", qparser::stopwords_digest()}};
}

struct IngestArgs {
  fs::path catalog, reviews, out;
  std::optional<fs::path> config;
  std::optional<std::int64_t> min_votes;
  std::optional<std::size_t> sample;
  std::uint64_t seed = 0;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  corpus::FilterPolicy policy;
  std::size_t sample = a.sample.value_or(0);
  std::uint64_t seed = a.seed;
  if (a.config) {
    auto doc = config::Document::load(*a.config);
    policy.min_helpful_votes = doc.get_int("filter.min_helpful_votes", policy.min_helpful_votes);
    policy.accept_vine = doc.get_bool("filter.accept_vine", policy.accept_vine);
    policy.min_text_chars = static_cast<std::size_t>(doc.get_int("filter.min_text_chars", 80));
    policy.max_text_chars = static_cast<std::size_t>(doc.get_int("filter.max_text_chars", 2000));
    if (!a.sample) sample = static_cast<std::size_t>(doc.get_int("sample.size", 0));
    if (a.seed == 0) seed = static_cast<std::uint64_t>(doc.get_int("sample.seed", 0));
  }
  if (a.min_votes) policy.min_helpful_votes = *a.min_votes;
  policy.validate();

  auto result = corpus::ingest(a.catalog, a.reviews, policy);
  auto contexts = sample > 0 ? corpus::sample_eval_set(result.contexts, sample, seed) : result.contexts;

  const auto contexts_path = a.out / "contexts.jsonl";
  const auto skip_path = a.out / "skip_log.txt";
  const auto summary_path = a.out / "ingest_summary.json";
  write_text(contexts_path, corpus::contexts_to_jsonl(contexts));
  write_text(skip_path, corpus::skip_log_text(result.skipped));
  json summary = {{"products", result.products.size()},
                  {"contexts", contexts.size()},
                  {"contexts_before_sampling", result.contexts.size()},
                  {"catalog_malformed", result.catalog_malformed},
                  {"reviews_loaded", result.reviews_loaded},
                  {"reviews_malformed", result.reviews_malformed},
                  {"reviews_kept", result.reviews_kept},
                  {"reviews_orphaned", result.reviews_orphaned},
                  {"skipped_products", result.skipped.size()},
                  {"policy",
                   {{"min_helpful_votes", policy.min_helpful_votes},
                    {"accept_vine", policy.accept_vine},
                    {"min_text_chars", policy.min_text_chars},
                    {"max_text_chars", policy.max_text_chars}}},
                  {"sample", {{"size", sample}, {"seed", seed}}}};
  write_text(summary_path, io::dump_pretty(summary));
  std::vector<fs::path> inputs = {a.catalog, a.reviews};
  if (a.config) inputs.push_back(*a.config);
  append_run_log(a.out, "ingest", inputs, {contexts_path, skip_path, summary_path});
  out << "ingested " << result.products.size() << " products into " << contexts.size() << " contexts ("
      << result.skipped.size() << " products skipped)\n";
  return 0;
}

struct GenerateArgs {
  fs::path contexts, backend, out;
  int k = 3;
  std::optional<fs::path> template_path;
  std::optional<fs::path> few_shot;
  std::optional<std::string> variant;
  std::size_t parallel = 1;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  auto backend_config = backend::BackendConfig::load(a.backend);
  auto generator = backend::make_generator(backend_config);
  auto contexts = corpus::read_contexts(a.contexts);

  promptkit::GenConfig gen;
  gen.k_questions = a.k;
  gen.temperature = backend_config.temperature;
  gen.max_tokens = backend_config.max_tokens;
  if (a.few_shot) {
    for (const auto& j : io::read_jsonl(*a.few_shot)) {
      try {
        gen.few_shot.push_back({j.at("context_text").get<std::string>(), j.at("rendered_output").get<std::string>()});
      } catch (const json::exception& e) {
        throw FormatError(a.few_shot->filename().string() + ": bad few-shot record: " + e.what());
      }
    }
  }
  gen.validate();
  const auto tmpl = a.template_path ? promptkit::load_template(*a.template_path) : promptkit::generation_template();
  const auto variant = a.variant ? quality::variant_from_string(*a.variant)
                                 : (gen.few_shot.empty() ? quality::Variant::icl_zero_shot
                                                         : quality::Variant::icl_few_shot);

  struct Slot {
    std::optional<std::string> skipped;
    std::string prompt_sha256;
    std::string text;
  };
  std::vector<Slot> slots(contexts.size());
  parallel_for(contexts.size(), a.parallel, [&](std::size_t i) {
    std::string prompt;
    try {
      prompt = promptkit::render_generation_prompt(contexts[i], gen, tmpl);
    } catch (const OversizeError& e) {
      slots[i].skipped = e.what();
      return;
    }
    backend::GenRequest request{prompt, backend_config.model_id, gen.temperature, gen.max_tokens, {}};
    slots[i].prompt_sha256 = text::sha256_hex(prompt);
    try {
      slots[i].text = generator->generate(request).text;
    } catch (const Error& e) {
      throw Error(e.error_class(), "context " + contexts[i].context_id + ": " + e.what());
    }
  });

  std::string completions, suggestions, reports;
  std::size_t accepted = 0, rejected = 0, skipped = 0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto& c = contexts[i];
    if (slots[i].skipped) {
      ++skipped;
      reports += io::dump_compact({{"context_id", c.context_id}, {"skipped", *slots[i].skipped}}) + "\n";
      continue;
    }
    completions += io::dump_compact({{"context_id", c.context_id},
                                     {"prompt_sha256", slots[i].prompt_sha256},
                                     {"text", slots[i].text}}) +
                   "\n";
    auto parsed = qparser::parse_suggestions(slots[i].text, c.context_id);
    accepted += parsed.suggestions.size();
    rejected += parsed.rejected_lines.size();
    for (const auto& s : parsed.suggestions) suggestions += io::dump_compact(qparser::to_json(s)) + "\n";
    reports += io::dump_compact(qparser::to_json(parsed, c.context_id)) + "\n";
  }

  json record = {{"variant", quality::to_string(variant)},
                 {"k", gen.k_questions},
                 {"few_shot_examples", gen.few_shot.size()},
                 {"template_id", tmpl.template_id},
                 {"template_sha256", text::sha256_hex(tmpl.body)},
                 {"backend_kind", backend::to_string(backend_config.kind)},
                 {"model_id", backend_config.model_id},
                 {"temperature", gen.temperature},
                 {"max_tokens", gen.max_tokens},
                 {"contexts_sha256", io::file_sha256(a.contexts)},
                 {"contexts", contexts.size()},
                 {"skipped_contexts", skipped},
                 {"accepted_suggestions", accepted},
                 {"rejected_lines", rejected}};

  const auto contexts_copy = a.out / "contexts.jsonl";
  const std::vector<fs::path> outputs = {a.out / "generation.json", a.out / "completions.jsonl",
                                         a.out / "suggestions.jsonl", a.out / "parse_report.jsonl",
                                         contexts_copy};
  write_text(outputs[0], io::dump_pretty(record));
  write_text(outputs[1], completions);
  write_text(outputs[2], suggestions);
  write_text(outputs[3], reports);
  if (fs::weakly_canonical(a.contexts) != fs::weakly_canonical(contexts_copy)) {
    write_text(contexts_copy, corpus::contexts_to_jsonl(contexts));
  }
  std::vector<fs::path> inputs = {a.contexts, a.backend};
  if (a.template_path) inputs.push_back(*a.template_path);
  if (a.few_shot) inputs.push_back(*a.few_shot);
  append_run_log(a.out, "generate", inputs, outputs);
  out << "generated " << accepted << " suggestions from " << contexts.size() << " contexts (" << rejected
      << " rejected lines, " << skipped << " contexts skipped)\n";
  return 0;
}

struct EvaluateArgs {
  fs::path run, judge;
  std::string policy = "count_as_no";
  std::size_t parallel = 1;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  auto judge_config = backend::BackendConfig::load(a.judge);
  auto generator = backend::make_generator(judge_config);
  const auto policy = quality::unmappable_policy_from_string(a.policy);

  const auto generation = json::parse(io::read_file(a.run / "generation.json"));
  const auto variant = quality::variant_from_string(generation.at("variant").get<std::string>());
  const auto contexts = index_contexts(corpus::read_contexts(a.run / "contexts.jsonl"));
  const auto suggestions = read_suggestions(a.run / "suggestions.jsonl");

  std::vector<quality::JudgeItem> items;
  for (const auto& s : suggestions) {
    auto it = contexts.find(s.context_id);
    if (it == contexts.end()) throw FormatError("suggestion refers to unknown context " + s.context_id);
    items.push_back({s, it->second, variant});
  }
  quality::JudgeOptions options{judge_config.model_id, judge_config.temperature, judge_config.max_tokens};
  const std::vector<promptkit::Dimension> dims(promptkit::kAllDimensions.begin(), promptkit::kAllDimensions.end());
  auto verdicts = quality::judge_all(items, dims, *generator, options, a.parallel);

  std::string log;
  for (const auto& v : verdicts) log += io::dump_compact(quality::to_json(v)) + "\n";
  auto table = quality::aggregate(verdicts, policy);
  auto diversity = suggestions.empty() ? std::vector<quality::DiversityReport>{} : diversity_per_context(suggestions);
  auto doc = quality::report(table, diversity, data_digests());

  const std::vector<fs::path> outputs = {a.run / "verdicts.jsonl", a.run / "quality_report.json",
                                         a.run / "quality_report.txt"};
  write_text(outputs[0], log);
  write_text(outputs[1], io::dump_pretty(doc.machine));
  write_text(outputs[2], doc.text);
  append_run_log(a.run, "evaluate",
                 {a.run / "generation.json", a.run / "contexts.jsonl", a.run / "suggestions.jsonl", a.judge},
                 outputs);
  out << doc.text;
  return 0;
}

struct ReportArgs {
  std::vector<fs::path> runs;
  std::vector<fs::path> verdict_files;
  fs::path out;
  std::string policy = "count_as_no";
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  if (a.runs.empty() && a.verdict_files.empty()) throw ContractViolation("report needs --run or --verdicts");
  std::vector<quality::QualityVerdict> verdicts;
  std::vector<quality::DiversityReport> diversity;
  std::vector<fs::path> inputs;
  auto add_verdicts = [&](const fs::path& p) {
    for (const auto& j : io::read_jsonl(p)) verdicts.push_back(quality::verdict_from_json(j));
    inputs.push_back(p);
  };
  for (const auto& run : a.runs) {
    add_verdicts(run / "verdicts.jsonl");
    const auto suggestions = read_suggestions(run / "suggestions.jsonl");
    inputs.push_back(run / "suggestions.jsonl");
    for (auto& d : diversity_per_context(suggestions)) diversity.push_back(d);
  }
  for (const auto& p : a.verdict_files) add_verdicts(p);

  auto table = quality::aggregate(verdicts, quality::unmappable_policy_from_string(a.policy));
  auto doc = quality::report(table, diversity, data_digests());
  const std::vector<fs::path> outputs = {a.out / "quality_report.json", a.out / "quality_report.txt"};
  write_text(outputs[0], io::dump_pretty(doc.machine));
  write_text(outputs[1], doc.text);
  append_run_log(a.out, "report", inputs, outputs);
  out << doc.text;
  return 0;
}

struct AgreementArgs {
  std::optional<fs::path> human, automatic, annotations;
  std::optional<fs::path> out;
};

int cmd_agreement(const AgreementArgs& a, std::ostream& out) {
  agreement::AgreementReport report;
  std::vector<fs::path> inputs;
  if (a.annotations) {
    report = agreement::percent_agreement(agreement::load_csv(*a.annotations));
    inputs.push_back(*a.annotations);
  } else {
    if (!a.human || !a.automatic) throw ContractViolation("agreement needs --human and --auto, or --annotations");
    report = agreement::percent_agreement(agreement::load_csv(*a.human), agreement::load_csv(*a.automatic));
    inputs = {*a.human, *a.automatic};
  }
  const auto text = agreement::render_text(report);
  if (a.out) {
    const std::vector<fs::path> outputs = {*a.out / "agreement.json", *a.out / "agreement.txt"};
    write_text(outputs[0], io::dump_pretty(agreement::to_json(report)));
    write_text(outputs[1], text);
    append_run_log(*a.out, "agreement", inputs, outputs);
  }
  out << text;
  return 0;
}

struct ExportArgs {
  std::vector<fs::path> runs;
  fs::path out;
  std::optional<fs::path> decisions;
  bool approve_pending = false;
  bool no_lint_gate = false;
  double validation_ratio = 0.1;
  std::uint64_t seed = 13;
};

int cmd_export(const ExportArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<sftexport::RunItem> items;
  std::vector<fs::path> inputs;
  std::vector<std::string> run_ids;
  for (const auto& run : a.runs) {
    const auto contexts = index_contexts(corpus::read_contexts(run / "contexts.jsonl"));
    const auto run_id = io::file_sha256(run / "suggestions.jsonl").substr(0, 16);
    run_ids.push_back(run_id);
    for (const auto& s : read_suggestions(run / "suggestions.jsonl")) {
      auto it = contexts.find(s.context_id);
      if (it == contexts.end()) throw FormatError("suggestion refers to unknown context " + s.context_id);
      items.push_back({it->second, s, run_id});
    }
    inputs.push_back(run / "contexts.jsonl");
    inputs.push_back(run / "suggestions.jsonl");
  }

  auto pairs = sftexport::curate(items, !a.no_lint_gate);
  std::vector<std::string> review_errors;
  if (a.decisions) {
    auto outcome = sftexport::apply_review(pairs, sftexport::read_decisions(*a.decisions));
    review_errors = outcome.errors;
    inputs.push_back(*a.decisions);
  }
  if (a.approve_pending) {
    for (auto& p : pairs) {
      if (p.status == sftexport::ReviewStatus::pending) p.status = sftexport::ReviewStatus::approved;
    }
  }

  sftexport::ExportConfig config;
  config.validation_ratio = a.validation_ratio;
  config.seed = a.seed;
  config.source_run_ids = run_ids;

  const auto pairs_path = a.out / "pairs.jsonl";
  const auto errors_path = a.out / "review_errors.txt";
  write_text(pairs_path, sftexport::pairs_to_jsonl(pairs));
  std::string errors_text;
  for (const auto& e : review_errors) errors_text += e + "\n";
  write_text(errors_path, errors_text);
  for (const auto& e : review_errors) err << "warning: " << e << "\n";

  auto result = sftexport::export_dataset(pairs, config, a.out / "sft");
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  append_run_log(a.out, "export-sft", inputs,
                 {pairs_path, errors_path, a.out / "sft" / "train.jsonl", a.out / "sft" / "validation.jsonl",
                  a.out / "sft" / "manifest.json"});
  out << "exported " << result.train_count + result.validation_count << " pairs (train "
      << result.train_count << ", validation " << result.validation_count << ") of " << pairs.size()
      << " curated\n";
  return 0;
}

std::atomic<app::HttpServer*> g_server{nullptr};

extern "C" void handle_stop_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

struct ServeArgs {
  fs::path config;
  std::optional<int> port;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  auto doc = config::Document::load(a.config);
  if (!doc.contains("service.contexts")) throw ConfigError("service.contexts is required");
  if (!doc.contains("service.backend")) throw ConfigError("service.backend is required");
  const auto backend_path = doc.get_path("service.backend", {});
  if (!fs::exists(backend_path)) throw ConfigError("backend config not found: " + backend_path.string());
  auto backend_config = backend::BackendConfig::load(backend_path);
  if (doc.contains("service.cache_dir")) backend_config.cache_dir = doc.get_path("service.cache_dir", {});
  auto generator = backend::make_generator(backend_config);

  app::ServiceOptions options;
  options.default_k = static_cast<int>(doc.get_int("service.k", 3));
  options.model_id = backend_config.model_id;
  options.temperature = backend_config.temperature;
  options.max_tokens = backend_config.max_tokens;
  options.replay_chunk_size = backend_config.chunk_size;
  if (doc.contains("service.template")) options.prompt_template = promptkit::load_template(doc.get_path("service.template", {}));

  app::SuggestionService service(corpus::read_contexts(doc.get_path("service.contexts", {})), *generator, options);
  app::HttpServer server(service);
  const auto host = doc.get_string("service.host", "127.0.0.1");
  const int port = server.bind(host, a.port.value_or(static_cast<int>(doc.get_int("service.port", 8080))));
  out << "listening on http://" << host << ":" << port << "\n" << std::flush;
  g_server.store(&server);
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  server.serve();
  g_server.store(nullptr);
  return 0;
}

}  // namespace

void append_run_log(const fs::path& dir, const std::string& command, const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs) {
  std::string line = command;
  auto describe = [](const fs::path& p) {
    return p.filename().string() + "=" + (fs::exists(p) ? io::file_sha256(p) : std::string("missing"));
  };
  for (const auto& p : inputs) line += " in:" + describe(p);
  for (const auto& p : outputs) line += " out:" + describe(p);
  fs::create_directories(dir);
  std::ofstream log(dir / "run.log", std::ios::app | std::ios::binary);
  if (!log) throw IoError("cannot append to " + (dir / "run.log").string());
  log << line << "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conversational product question suggestions: ingest, generate, evaluate, export, serve", "qsuggest"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qsuggest 0.1.0");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Filter reviews and build product contexts");
  ingest_cmd->add_option("--catalog", ingest.catalog, "Catalog metadata JSONL")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--reviews", ingest.reviews, "Reviews JSONL")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();
  ingest_cmd->add_option("--config", ingest.config, "Filter and sampling config")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--min-votes", ingest.min_votes, "Minimum helpful votes");
  ingest_cmd->add_option("--sample", ingest.sample, "Sample this many contexts");
  ingest_cmd->add_option("--seed", ingest.seed, "Sampling seed");

  GenerateArgs generate;
  auto* generate_cmd = app.add_subcommand("generate", "Generate and parse suggestions for contexts");
  generate_cmd->add_option("--contexts", generate.contexts, "contexts.jsonl")->required()->check(CLI::ExistingFile);
  generate_cmd->add_option("--backend", generate.backend, "Backend config")->required()->check(CLI::ExistingFile);
  generate_cmd->add_option("--out", generate.out, "Run directory")->required();
  generate_cmd->add_option("--k", generate.k, "Questions per context")->check(CLI::Range(1, 10));
  generate_cmd->add_option("--template", generate.template_path, "Prompt template override")->check(CLI::ExistingFile);
  generate_cmd->add_option("--few-shot", generate.few_shot, "Few-shot examples JSONL")->check(CLI::ExistingFile);
  generate_cmd->add_option("--variant", generate.variant, "Variant label (icl_zero_shot, icl_few_shot, sft)");
  generate_cmd->add_option("--parallel", generate.parallel, "Concurrent requests")->check(CLI::PositiveNumber);

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Judge a run's suggestions and write a quality report");
  evaluate_cmd->add_option("--run", evaluate.run, "Run directory")->required()->check(CLI::ExistingDirectory);
  evaluate_cmd->add_option("--judge", evaluate.judge, "Judge backend config")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--unmappable", evaluate.policy, "count_as_no or exclude");
  evaluate_cmd->add_option("--parallel", evaluate.parallel, "Concurrent judge calls")->check(CLI::PositiveNumber);

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Combine verdict logs into one quality table");
  report_cmd->add_option("--run", report.runs, "Evaluated run directory (repeatable)")->check(CLI::ExistingDirectory);
  report_cmd->add_option("--verdicts", report.verdict_files, "Verdict log (repeatable)")->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report.out, "Output directory")->required();
  report_cmd->add_option("--unmappable", report.policy, "count_as_no or exclude");

  AgreementArgs agree;
  auto* agreement_cmd = app.add_subcommand("agreement", "Percent agreement between human and automatic labels");
  auto* human_opt =
      agreement_cmd->add_option("--human", agree.human, "Human annotations CSV")->check(CLI::ExistingFile);
  auto* auto_opt =
      agreement_cmd->add_option("--auto", agree.automatic, "Automatic annotations CSV")->check(CLI::ExistingFile);
  auto* mixed_opt = agreement_cmd->add_option("--annotations", agree.annotations, "Mixed annotations CSV")
                        ->check(CLI::ExistingFile)
                        ->excludes(human_opt)
                        ->excludes(auto_opt);
  human_opt->needs(auto_opt);
  auto_opt->needs(human_opt);
  agreement_cmd->callback([mixed_opt, human_opt] {
    if (mixed_opt->count() == 0 && human_opt->count() == 0) {
      throw CLI::RequiredError("agreement needs --annotations, or --human with --auto");
    }
  });
  agreement_cmd->add_option("--out", agree.out, "Output directory");

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export-sft", "Curate pairs and export an SFT dataset");
  export_cmd->add_option("--run", exp.runs, "Run directory (repeatable)")->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--out", exp.out, "Output directory")->required();
  export_cmd->add_option("--decisions", exp.decisions, "Review decisions JSONL")->check(CLI::ExistingFile);
  export_cmd->add_flag("--approve-pending", exp.approve_pending, "Approve every pair still pending after review");
  export_cmd->add_flag("--no-lint-gate", exp.no_lint_gate, "Do not pre-reject pairs failing the style lint");
  export_cmd->add_option("--validation-ratio", exp.validation_ratio, "Validation fraction")->check(CLI::Range(0.0, 0.99));
  export_cmd->add_option("--seed", exp.seed, "Split seed");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP suggestion service");
  serve_cmd->add_option("--config", serve.config, "Service config")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--port", serve.port, "Override the configured port");

  try {
    // CLI11 consumes the vector from the back.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, out);
    if (*generate_cmd) return cmd_generate(generate, out);
    if (*evaluate_cmd) return cmd_evaluate(evaluate, out);
    if (*report_cmd) return cmd_report(report, out);
    if (*agreement_cmd) return cmd_agreement(agree, out);
    if (*export_cmd) return cmd_export(exp, out, err);
    if (*serve_cmd) return cmd_serve(serve, out);
  } catch (const Error& e) {
    err << "error: " << e.error_class() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace qsuggest::cli
