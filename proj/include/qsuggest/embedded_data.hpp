#pragma once

#include <string_view>

// Versioned data files from data/, compiled into the library so runs do not
// depend on the working directory.
namespace qsuggest::data {

std::string_view generation_prompt();
std::string_view stopwords();
std::string_view question_types();

}  // namespace qsuggest::data
