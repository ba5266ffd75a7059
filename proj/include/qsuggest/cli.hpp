#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qsuggest::cli {

// Exit codes: 0 success, 1 runtime failure ("error: <class>: <message>" on
// stderr), 2 usage errors including missing config files.
int run_cli(int argc, char** argv);
// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Appends one line to <dir>/run.log naming the command and the SHA-256 of each
// input and output file (by basename; no timestamps, so reruns compare equal).
void append_run_log(const std::filesystem::path& dir, const std::string& command,
                    const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs);

}  // namespace qsuggest::cli
