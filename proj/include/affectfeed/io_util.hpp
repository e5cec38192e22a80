#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace affectfeed {

// Writes via a sibling temp file and renames over the target, so readers
// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Calls fn(line, 1-based line number) for every non-blank line.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace affectfeed
