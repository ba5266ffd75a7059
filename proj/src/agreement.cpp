#include "qsuggest/agreement.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::agreement {
namespace {

using Key = std::pair<std::string, Dimension>;

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(text::trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.emplace_back(text::trim(current));
  return fields;
}

std::map<Key, Label> index(const std::vector<AnnotationRecord>& records, std::string_view side) {
  std::map<Key, Label> out;
  for (const auto& r : records) {
    if (!out.emplace(Key{r.item_id, r.dimension}, r.label).second) {
      throw FormatError(std::string(side) + " annotations repeat item " + r.item_id + " / " +
                        std::string(promptkit::to_string(r.dimension)));
    }
  }
  return out;
}

}  // namespace

Label label_from_string(std::string_view s) {
  auto l = text::to_lower(text::trim(s));
  if (l == "yes") return Label::yes;
  if (l == "no" || l == "partial") return Label::no;
  throw FormatError("unknown label '" + std::string(s) + "'");
}

std::string_view to_string(Label l) { return l == Label::yes ? "yes" : "no"; }

Annotator annotator_from_string(std::string_view s) {
  auto a = text::to_lower(text::trim(s));
  if (a == "human") return Annotator::human;
  if (a == "auto" || a == "automatic") return Annotator::automatic;
  throw FormatError("unknown annotator '" + std::string(s) + "'");
}

std::string_view to_string(Annotator a) { return a == Annotator::human ? "human" : "auto"; }

std::vector<AnnotationRecord> parse_csv(std::string_view content, std::string_view source) {
  std::vector<AnnotationRecord> records;
  std::set<std::tuple<std::string, Dimension, Annotator>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    auto line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;

    auto fields = split_csv_row(trimmed);
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (records.empty() && seen.empty() && text::to_lower(fields[0]) == "item_id") continue;
    if (fields.size() != 4) throw FormatError(where + ": expected 4 fields, got " + std::to_string(fields.size()));
    if (fields[0].empty()) throw FormatError(where + ": empty item_id");

    AnnotationRecord r;
    r.item_id = fields[0];
    try {
      r.dimension = promptkit::dimension_from_string(text::to_lower(fields[1]));
      r.label = label_from_string(fields[2]);
      r.annotator = annotator_from_string(fields[3]);
    } catch (const Error& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!seen.emplace(r.item_id, r.dimension, r.annotator).second) {
      throw FormatError(where + ": duplicate annotation for " + r.item_id + " / " + fields[1]);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<AnnotationRecord> load_csv(const std::filesystem::path& path) {
  return parse_csv(io::read_file(path), path.filename().string());
}

const DimensionAgreement* AgreementReport::find(Dimension d) const {
  for (const auto& a : dimensions) {
    if (a.dimension == d) return &a;
  }
  return nullptr;
}

AgreementReport percent_agreement(const std::vector<AnnotationRecord>& human,
                                  const std::vector<AnnotationRecord>& automatic) {
  const auto h = index(human, "human");
  const auto a = index(automatic, "auto");

  AgreementReport report;
  std::set<Key> unpaired;
  for (const auto& [key, label] : h) {
    if (!a.count(key)) unpaired.insert(key);
  }
  for (const auto& [key, label] : a) {
    if (!h.count(key)) unpaired.insert(key);
  }
  for (const auto& [item, dim] : unpaired) report.excluded.push_back({item, dim});

  double percent_sum = 0;
  for (auto dim : promptkit::kAllDimensions) {
    std::size_t matches = 0, total = 0, h_yes = 0, a_yes = 0;
    for (const auto& [key, label] : h) {
      if (key.second != dim) continue;
      auto it = a.find(key);
      if (it == a.end()) continue;
      ++total;
      matches += label == it->second;
      h_yes += label == Label::yes;
      a_yes += it->second == Label::yes;
    }
    if (total == 0) {
      report.warnings.push_back("no paired annotations for " + std::string(promptkit::to_string(dim)) +
                                "; dimension omitted");
      continue;
    }
    DimensionAgreement d;
    d.dimension = dim;
    d.matches = matches;
    d.total = total;
    d.percent = 100.0 * static_cast<double>(matches) / static_cast<double>(total);
    const double n = static_cast<double>(total);
    const double po = static_cast<double>(matches) / n;
    const double pe = (static_cast<double>(h_yes) / n) * (static_cast<double>(a_yes) / n) +
                      (static_cast<double>(total - h_yes) / n) * (static_cast<double>(total - a_yes) / n);
    if (pe < 1.0) d.kappa = (po - pe) / (1.0 - pe);
    percent_sum += d.percent;
    report.dimensions.push_back(d);
  }
  if (!report.dimensions.empty()) {
    report.overall_percent = percent_sum / static_cast<double>(report.dimensions.size());
  }
  return report;
}

AgreementReport percent_agreement(const std::vector<AnnotationRecord>& mixed) {
  std::vector<AnnotationRecord> human, automatic;
  for (const auto& r : mixed) (r.annotator == Annotator::human ? human : automatic).push_back(r);
  return percent_agreement(human, automatic);
}

json to_json(const AgreementReport& report) {
  json dims = json::array();
  for (const auto& d : report.dimensions) {
    dims.push_back({{"dimension", promptkit::to_string(d.dimension)},
                    {"matches", d.matches},
                    {"total", d.total},
                    {"percent", d.percent},
                    {"kappa", d.kappa ? json(*d.kappa) : json(nullptr)}});
  }
  json excluded = json::array();
  for (const auto& e : report.excluded) {
    excluded.push_back({{"item_id", e.item_id}, {"dimension", promptkit::to_string(e.dimension)}});
  }
  return json{{"dimensions", dims},
              {"overall_percent", report.overall_percent ? json(*report.overall_percent) : json(nullptr)},
              {"excluded", excluded},
              {"warnings", report.warnings}};
}

std::string render_text(const AgreementReport& report) {
  std::string out = "Dimension       Matches  Total  Agreement  Kappa*\n";
  for (const auto& d : report.dimensions) {
    char row[128];
    std::string name(promptkit::to_string(d.dimension));
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    std::snprintf(row, sizeof row, "%-15s %7zu %6zu %9s%% %6s\n", name.c_str(), d.matches, d.total,
                  fixed2(d.percent).c_str(), d.kappa ? fixed2(*d.kappa).c_str() : "-");
    out += row;
  }
  out += "Overall (mean of dimensions): " +
         (report.overall_percent ? fixed2(*report.overall_percent) + "%" : std::string("-")) + "\n";
  out += "* Cohen's kappa, reported in addition to raw percent agreement.\n";
  if (!report.excluded.empty()) {
    out += "Excluded unpaired annotations: " + std::to_string(report.excluded.size()) + "\n";
  }
  for (const auto& w : report.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace qsuggest::agreement
