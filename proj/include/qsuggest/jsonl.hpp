#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qsuggest {

using json = nlohmann::json;

namespace io {

// Compact one-line serialization; invalid UTF-8 is replaced rather than thrown.
std::string dump_compact(const json& j);

// Stable pretty form used for manifests and reports.
std::string dump_pretty(const json& j);

std::string read_file(const std::filesystem::path& path);

// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Calls fn(line, line_number) for every line; line numbers start at 1.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<json>& records);

std::string file_sha256(const std::filesystem::path& path);

}  // namespace io
}  // namespace qsuggest
