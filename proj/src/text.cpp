#include "qsuggest/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "qsuggest/embedded_data.hpp"
#include "qsuggest/errors.hpp"

namespace qsuggest::text {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

const std::unordered_set<std::string>& stopword_set() {
  static const std::unordered_set<std::string> kSet = [] {
    std::unordered_set<std::string> words;
    std::string_view all = data::stopwords();
    while (!all.empty()) {
      auto nl = all.find('\n');
      auto line = trim(all.substr(0, nl));
      if (!line.empty() && line.front() != '#') words.emplace(line);
      if (nl == std::string_view::npos) break;
      all.remove_prefix(nl + 1);
    }
    return words;
  }();
  return kSet;
}

bool is_utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char ch : s) {
    if (is_space(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ch);
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

namespace {

// Non-ASCII code points that act as punctuation or spacing: the Latin-1
// symbols, General Punctuation (dashes, curly quotes, ellipsis) and CJK
// punctuation.
bool is_separator_code_point(std::uint32_t cp) {
  return (cp >= 0xA0 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 || (cp >= 0x2000 && cp <= 0x206F) ||
         (cp >= 0x3000 && cp <= 0x303F) || cp == 0xFEFF;
}

// Length and code point of the UTF-8 sequence at s[i]; malformed bytes count
// as one-byte sequences with no code point.
std::pair<std::size_t, std::uint32_t> decode_utf8(std::string_view s, std::size_t i) {
  const auto b = static_cast<unsigned char>(s[i]);
  std::size_t len = b >= 0xF0 ? 4 : b >= 0xE0 ? 3 : b >= 0xC0 ? 2 : 1;
  if (len == 1 || i + len > s.size()) return {1, 0};
  std::uint32_t cp = b & (0x3F >> (len - 1));
  for (std::size_t k = 1; k < len; ++k) {
    const auto c = static_cast<unsigned char>(s[i + k]);
    if ((c & 0xC0) != 0x80) return {1, 0};
    cp = (cp << 6) | (c & 0x3F);
  }
  return {len, cp};
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      if (std::isalnum(c)) {
        current.push_back(static_cast<char>(std::tolower(c)));
      } else {
        flush();
      }
      ++i;
      continue;
    }
    const auto [len, cp] = decode_utf8(s, i);
    if (is_separator_code_point(cp)) {
      flush();
    } else {
      current.append(s.substr(i, len));
    }
    i += len;
  }
  flush();
  return tokens;
}

std::string stem(std::string_view token) {
  std::string w(token);
  if (w.size() <= 3) return w;

  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ies") && w.size() > 4) {
    w.resize(w.size() - 3);
    w.push_back('y');
  } else if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
             !ends_with(w, "is")) {
    w.pop_back();
  }

  bool verbal = false;
  if (ends_with(w, "ing") && w.size() >= 6) {
    w.resize(w.size() - 3);
    verbal = true;
  } else if (ends_with(w, "ed") && w.size() >= 5) {
    w.resize(w.size() - 2);
    verbal = true;
  } else if (ends_with(w, "ly") && w.size() >= 5) {
    w.resize(w.size() - 2);
  }

  if (verbal && w.size() >= 2) {
    char last = w.back();
    char prev = w[w.size() - 2];
    if (last == prev && std::isalpha(static_cast<unsigned char>(last)) && !is_vowel(last) &&
        last != 'l' && last != 's' && last != 'z') {
      w.pop_back();
    }
  }
  return w;
}

bool is_stopword(std::string_view lowercase_token) {
  return stopword_set().count(std::string(lowercase_token)) > 0;
}

std::size_t stopword_count() { return stopword_set().size(); }

StemSet content_stems(std::string_view s) {
  StemSet stems;
  for (const auto& tok : tokenize(s)) {
    if (!is_stopword(tok)) stems.insert(stem(tok));
  }
  return stems;
}

double jaccard(const StemSet& a, const StemSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t shared = 0;
  for (const auto& x : a) shared += b.count(x);
  const std::size_t uni = a.size() + b.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(uni);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("crypto_error", "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::string short_id(std::initializer_list<std::string_view> parts) {
  std::string joined;
  bool first = true;
  for (auto p : parts) {
    if (!first) joined.push_back('\0');
    joined.append(p);
    first = false;
  }
  return sha256_hex(joined).substr(0, 16);
}

std::size_t utf8_floor(std::string_view s, std::size_t max_bytes) {
  if (max_bytes >= s.size()) return s.size();
  std::size_t end = max_bytes;
  while (end > 0 && is_utf8_continuation(static_cast<unsigned char>(s[end]))) --end;
  return end;
}

std::vector<std::string> chunk_utf8(std::string_view s, std::size_t chunk_bytes) {
  if (chunk_bytes == 0) throw ContractViolation("chunk size must be positive");
  std::vector<std::string> chunks;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = std::min(s.size(), pos + chunk_bytes);
    while (end < s.size() && is_utf8_continuation(static_cast<unsigned char>(s[end]))) ++end;
    chunks.emplace_back(s.substr(pos, end - pos));
    pos = end;
  }
  return chunks;
}

std::size_t estimate_tokens(std::size_t chars) { return (chars + 3) / 4; }

}  // namespace qsuggest::text
