#include "qsuggest/quality.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <numeric>
#include <thread>

#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::quality {
namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string capitalized(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

// Smallest-index representative, with path halving.
std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::partial: return "partial";
    case Verdict::no: return "no";
  }
  return "no";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "yes") return Verdict::yes;
  if (s == "partial") return Verdict::partial;
  if (s == "no") return Verdict::no;
  throw FormatError("unknown verdict '" + std::string(s) + "'");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::icl_zero_shot: return "icl_zero_shot";
    case Variant::icl_few_shot: return "icl_few_shot";
    case Variant::sft: return "sft";
  }
  return "icl_zero_shot";
}

Variant variant_from_string(std::string_view s) {
  for (auto v : kAllVariants) {
    if (to_string(v) == s) return v;
  }
  throw FormatError("unknown variant '" + std::string(s) + "'");
}

std::string_view column_label(Variant v) {
  switch (v) {
    case Variant::icl_zero_shot: return "ICL (zero-shot)";
    case Variant::icl_few_shot: return "ICL (few-shot)";
    case Variant::sft: return "SFT";
  }
  return "";
}

std::string_view to_string(UnmappablePolicy p) {
  return p == UnmappablePolicy::count_as_no ? "count_as_no" : "exclude";
}

UnmappablePolicy unmappable_policy_from_string(std::string_view s) {
  if (s == "count_as_no") return UnmappablePolicy::count_as_no;
  if (s == "exclude") return UnmappablePolicy::exclude;
  throw ConfigError("unknown unmappable policy '" + std::string(s) + "'");
}

json to_json(const QualityVerdict& v) {
  return json{{"suggestion_ref", v.suggestion_ref},
              {"dimension", promptkit::to_string(v.dimension)},
              {"variant", to_string(v.variant)},
              {"verdict", to_string(v.verdict)},
              {"mapped", v.mapped},
              {"judge_model", v.judge_model},
              {"raw_response_sha256", text::sha256_hex(v.raw_response)}};
}

QualityVerdict verdict_from_json(const json& j) {
  try {
    QualityVerdict v;
    v.suggestion_ref = j.at("suggestion_ref").get<std::string>();
    v.dimension = promptkit::dimension_from_string(j.at("dimension").get<std::string>());
    v.variant = variant_from_string(j.at("variant").get<std::string>());
    v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    v.mapped = j.value("mapped", true);
    v.judge_model = j.value("judge_model", "");
    if (v.verdict == Verdict::partial && v.dimension != Dimension::answerability) {
      throw FormatError("partial verdict outside answerability for " + v.suggestion_ref);
    }
    return v;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad verdict record: ") + e.what());
  }
}

std::optional<Verdict> map_verdict(std::string_view response, Dimension dimension) {
  for (const auto& token : text::tokenize(response)) {
    if (token == "yes") return Verdict::yes;
    if (token == "no") return Verdict::no;
    if (token == "partial") {
      if (dimension == Dimension::answerability) return Verdict::partial;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

QualityVerdict judge(const qparser::QuestionSuggestion& suggestion,
                     const corpus::ProductContext& context, Dimension dimension, Variant variant,
                     backend::Generator& generator, const JudgeOptions& options) {
  const auto ref = qparser::suggestion_ref(suggestion);
  backend::GenRequest request;
  request.prompt = promptkit::render_judge_prompt(suggestion.question, context, dimension);
  request.model_id = options.model_id;
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;

  backend::Completion completion;
  try {
    completion = generator.generate(request);
  } catch (const Error& e) {
    throw Error(e.error_class(), "suggestion " + ref + ": " + e.what());
  }

  QualityVerdict v;
  v.suggestion_ref = ref;
  v.dimension = dimension;
  v.variant = variant;
  v.judge_model = options.model_id;
  v.raw_response = completion.text;
  if (auto mapped = map_verdict(completion.text, dimension)) {
    v.verdict = *mapped;
  } else {
    v.verdict = Verdict::no;
    v.mapped = false;
  }
  return v;
}

std::vector<QualityVerdict> judge_all(const std::vector<JudgeItem>& items,
                                      const std::vector<Dimension>& dimensions,
                                      backend::Generator& generator, const JudgeOptions& options,
                                      std::size_t parallelism) {
  const std::size_t total = items.size() * dimensions.size();
  std::vector<QualityVerdict> out(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
      const auto& item = items[i / dimensions.size()];
      try {
        out[i] = judge(item.suggestion, item.context, dimensions[i % dimensions.size()], item.variant,
                       generator, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(total, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

const CellStats* QualityTable::cell(Variant v, Dimension d) const {
  auto it = cells.find({v, d});
  return it == cells.end() ? nullptr : &it->second;
}

std::optional<double> QualityTable::score(Variant v, Dimension d) const {
  const auto* c = cell(v, d);
  return c ? c->score : std::nullopt;
}

QualityTable aggregate(const std::vector<QualityVerdict>& verdicts, UnmappablePolicy policy) {
  QualityTable table;
  table.policy = policy;
  for (const auto& v : verdicts) {
    auto& c = table.cells[{v.variant, v.dimension}];
    if (!v.mapped) {
      ++c.unmappable;
      continue;
    }
    switch (v.verdict) {
      case Verdict::yes: ++c.yes; break;
      case Verdict::partial: ++c.partial; break;
      case Verdict::no: ++c.no; break;
    }
  }
  for (auto& [key, c] : table.cells) {
    const std::size_t negative_unmapped = policy == UnmappablePolicy::count_as_no ? c.unmappable : 0;
    c.n = c.yes + c.partial + c.no + negative_unmapped;
    if (c.n > 0) c.score = static_cast<double>(c.yes) / static_cast<double>(c.n);
    const std::size_t negatives = c.partial + c.no + negative_unmapped;
    if (key.second == Dimension::answerability && negatives > 0) {
      c.partial_among_negative = static_cast<double>(c.partial) / static_cast<double>(negatives);
    }
  }
  return table;
}

LengthBin length_bin(std::string_view question) {
  const auto n = text::tokenize(question).size();
  if (n <= 8) return LengthBin::short_q;
  if (n <= 16) return LengthBin::medium_q;
  return LengthBin::long_q;
}

DiversityReport diversity(const std::vector<std::string>& questions) {
  if (questions.empty()) throw ContractViolation("diversity needs at least one question");
  DiversityReport r;
  r.list_size = questions.size();
  if (questions.size() == 1) return r;

  std::vector<text::StemSet> stems;
  std::set<LengthBin> bins;
  for (const auto& q : questions) {
    stems.push_back(text::content_stems(q));
    bins.insert(length_bin(q));
  }

  const std::size_t n = questions.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<double> distances;
  distances.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sim = text::jaccard(stems[i], stems[j]);
      distances.push_back(1.0 - sim);
      if (sim >= 0.5) {
        auto a = find_root(parent, i), b = find_root(parent, j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  // Summing in sorted order makes the mean independent of list order.
  std::sort(distances.begin(), distances.end());
  double sum = 0;
  for (double d : distances) sum += d;
  std::size_t clusters = 0;
  for (std::size_t i = 0; i < n; ++i) clusters += find_root(parent, i) == i;

  r.lexical_diversity = sum / static_cast<double>(distances.size());
  r.length_diversity = static_cast<double>(bins.size()) / static_cast<double>(std::min<std::size_t>(n, 3));
  r.aspect_diversity = static_cast<double>(clusters) / static_cast<double>(n);
  r.overall = (r.length_diversity + r.lexical_diversity + r.aspect_diversity) / 3.0;
  return r;
}

DiversityReport diversity(const std::vector<qparser::QuestionSuggestion>& list) {
  std::vector<std::string> questions;
  questions.reserve(list.size());
  for (const auto& s : list) questions.push_back(s.question);
  return diversity(questions);
}

std::string render_table(const QualityTable& table) {
  constexpr std::size_t kFirst = 16, kCol = 18;
  std::string out = pad("Metric", kFirst);
  for (auto v : kAllVariants) out += pad(std::string(column_label(v)), kCol);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  out += "\n";
  for (auto d : promptkit::kAllDimensions) {
    std::string row = pad(capitalized(promptkit::to_string(d)), kFirst);
    for (auto v : kAllVariants) {
      auto s = table.score(v, d);
      row += pad(s ? fixed2(*s) : "-", kCol);
    }
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out += row + "\n";
  }
  return out;
}

ReportDocument report(const QualityTable& table, const std::vector<DiversityReport>& lists,
                      const std::map<std::string, std::string>& digests) {
  ReportDocument doc;
  json cells = json::array();
  for (const auto& [key, c] : table.cells) {
    json rec = {{"variant", to_string(key.first)},
                {"dimension", promptkit::to_string(key.second)},
                {"score", c.score ? json(*c.score) : json(nullptr)},
                {"n", c.n},
                {"yes", c.yes},
                {"partial", c.partial},
                {"no", c.no},
                {"unmappable", c.unmappable}};
    if (c.partial_among_negative) rec["partial_among_negative"] = *c.partial_among_negative;
    cells.push_back(std::move(rec));
  }
  doc.machine = {{"unmappable_policy", to_string(table.policy)}, {"cells", cells}};
  if (!digests.empty()) doc.machine["data_digests"] = digests;

  doc.text = render_table(table);
  std::string sizes;
  for (const auto& [key, c] : table.cells) {
    sizes += "  " + std::string(to_string(key.first)) + "/" + std::string(promptkit::to_string(key.second)) +
             ": n=" + std::to_string(c.n);
    if (c.unmappable > 0) sizes += " (unmappable " + std::to_string(c.unmappable) + ")";
    if (c.partial_among_negative) sizes += ", partial among negative " + fixed2(*c.partial_among_negative);
    sizes += "\n";
  }
  if (!sizes.empty()) doc.text += "\nSample sizes:\n" + sizes;

  if (!lists.empty()) {
    double overall = 0, length = 0, lexical = 0, aspect = 0;
    for (const auto& d : lists) {
      overall += d.overall;
      length += d.length_diversity;
      lexical += d.lexical_diversity;
      aspect += d.aspect_diversity;
    }
    const double n = static_cast<double>(lists.size());
    const bool met = overall / n >= kDiversityTarget;
    doc.machine["diversity"] = {{"lists", lists.size()},
                                {"mean_overall", overall / n},
                                {"mean_length", length / n},
                                {"mean_lexical", lexical / n},
                                {"mean_aspect", aspect / n},
                                {"target", kDiversityTarget},
                                {"target_met", met}};
    doc.text += "\nDiversity over " + std::to_string(lists.size()) + " list(s): mean " + fixed2(overall / n) +
                " (length " + fixed2(length / n) + ", lexical " + fixed2(lexical / n) + ", aspect " +
                fixed2(aspect / n) + "); target " + fixed2(kDiversityTarget) + (met ? " met" : " not met") +
                "\n";
  }
  if (!digests.empty()) {
    doc.text += "\nData digests:\n";
    for (const auto& [name, digest] : digests) doc.text += "  " + name + " " + digest + "\n";
  }
  return doc;
}

}  // namespace qsuggest::quality
