#include "qsuggest/config.hpp"

#include <charconv>

#include "qsuggest/errors.hpp"
#include "qsuggest/jsonl.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest::config {
namespace {

std::string strip_comment(std::string_view line) {
  bool in_string = false;
  std::string out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_string && c == '\\' && i + 1 < line.size()) {
      out.push_back(c);
      out.push_back(line[++i]);
      continue;
    }
    if (c == '"') in_string = !in_string;
    if (c == '#' && !in_string) break;
    out.push_back(c);
  }
  return out;
}

Value parse_scalar(std::string_view raw, const std::string& where) {
  if (raw.empty()) throw ConfigError(where + ": missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ConfigError(where + ": unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      char c = raw[i];
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (i + 2 >= raw.size()) throw ConfigError(where + ": dangling escape");
      switch (raw[++i]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: throw ConfigError(where + ": unsupported escape");
      }
    }
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;

  std::int64_t iv = 0;
  auto [iend, iec] = std::from_chars(raw.data(), raw.data() + raw.size(), iv);
  if (iec == std::errc() && iend == raw.data() + raw.size()) return iv;

  double dv = 0;
  auto [dend, dec] = std::from_chars(raw.data(), raw.data() + raw.size(), dv);
  if (dec == std::errc() && dend == raw.data() + raw.size()) return dv;

  throw ConfigError(where + ": cannot parse value '" + std::string(raw) + "'");
}

void flatten(const json& j, const std::string& prefix, Document& doc, const std::string& origin) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = it.value();
    if (v.is_object()) {
      flatten(v, key, doc, origin);
    } else if (v.is_string()) {
      doc.set(key, v.get<std::string>());
    } else if (v.is_boolean()) {
      doc.set(key, v.get<bool>());
    } else if (v.is_number_integer()) {
      doc.set(key, v.get<std::int64_t>());
    } else if (v.is_number()) {
      doc.set(key, v.get<double>());
    } else if (!v.is_null()) {
      throw ConfigError(origin + ": unsupported value for '" + key + "'");
    }
  }
}

}  // namespace

Document Document::parse_toml(std::string_view source, const std::string& origin) {
  Document doc;
  doc.origin_ = origin;
  std::string section;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    auto nl = source.find('\n', pos);
    std::string line = strip_comment(source.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
    pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
    ++number;

    std::string where = origin + ":" + std::to_string(number);
    auto body = text::trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(text::trim(body.substr(1, body.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    std::string key(text::trim(body.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    doc.values_[key] = parse_scalar(text::trim(body.substr(eq + 1)), where);
  }
  return doc;
}

Document Document::parse_json(std::string_view source, const std::string& origin) {
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
  Document doc;
  doc.origin_ = origin;
  flatten(j, "", doc, origin);
  return doc;
}

Document Document::load(const std::filesystem::path& path) {
  std::string content;
  try {
    content = io::read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read config " + path.string());
  }
  Document doc = path.extension() == ".json" ? parse_json(content, path.string())
                                              : parse_toml(content, path.string());
  doc.base_dir_ = path.parent_path();
  return doc;
}

std::string Document::get_string(const std::string& key, std::string fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError(origin_ + ": '" + key + "' must be a string");
}

std::int64_t Document::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  throw ConfigError(origin_ + ": '" + key + "' must be an integer");
}

double Document::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto* d = std::get_if<double>(&it->second)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw ConfigError(origin_ + ": '" + key + "' must be a number");
}

bool Document::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto* b = std::get_if<bool>(&it->second)) return *b;
  throw ConfigError(origin_ + ": '" + key + "' must be true or false");
}

std::filesystem::path Document::get_path(const std::string& key,
                                         const std::filesystem::path& fallback) const {
  if (!contains(key)) return fallback;
  std::filesystem::path p = get_string(key, "");
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

}  // namespace qsuggest::config
