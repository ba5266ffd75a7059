#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace qsuggest::text {

using StemSet = std::set<std::string>;

std::string_view trim(std::string_view s);

// Collapses every run of ASCII whitespace into one space and trims the ends.
std::string normalize_whitespace(std::string_view s);

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

bool ends_with(std::string_view s, std::string_view suffix);
bool starts_with(std::string_view s, std::string_view prefix);

// Lowercased maximal runs of [A-Za-z0-9] and non-ASCII characters. ASCII
// punctuation, whitespace and Unicode punctuation ("…", curly quotes, dashes,
// no-break space) separate tokens.
std::vector<std::string> tokenize(std::string_view s);

// Suffix-stripping stemmer. Rules, applied to a lowercase token:
//   1. tokens of 3 or fewer bytes are returned unchanged;
//   2. "sses" -> "ss"; "ies" -> "y" when the token is longer than 4 bytes;
//      otherwise a final "s" is dropped unless the token ends in "ss", "us"
//      or "is";
//   3. then at most one of "ing", "ed", "ly" is removed (checked in that
//      order) when at least 3 bytes remain;
//   4. after removing "ing" or "ed", a doubled final consonant other than
//      l, s or z is reduced to one ("stopping" -> "stop").
std::string stem(std::string_view token);

// Membership in the shipped 150-word list (data/stopwords.txt). Interrogatives
// are part of the list.
bool is_stopword(std::string_view lowercase_token);
std::size_t stopword_count();

// Stems of all non-stopword tokens.
StemSet content_stems(std::string_view s);

// |a ∩ b| / |a ∪ b|; two empty sets are identical (1.0).
double jaccard(const StemSet& a, const StemSet& b);

std::string sha256_hex(std::string_view bytes);

// First 16 hex chars of the SHA-256 of the parts joined with '\0'.
std::string short_id(std::initializer_list<std::string_view> parts);

// Splits into pieces of `chunk_bytes` bytes, extended so that no UTF-8
// sequence is cut. Concatenating the result yields `s`.
std::vector<std::string> chunk_utf8(std::string_view s, std::size_t chunk_bytes);

// Longest prefix of at most max_bytes that does not end inside a UTF-8
// sequence.
std::size_t utf8_floor(std::string_view s, std::size_t max_bytes);

// Token budget estimate: ceil(chars / 4).
std::size_t estimate_tokens(std::size_t chars);

}  // namespace qsuggest::text
