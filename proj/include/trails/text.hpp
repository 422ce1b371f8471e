#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the LLM-output parsers.
namespace trails::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

/// Splits on '\n', dropping a trailing '\r' on each line. A trailing newline does
/// not produce an extra empty line.
std::vector<std::string_view> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Leading whitespace width, tabs counted as 4.
std::size_t indent_of(std::string_view line);

}  // namespace trails::text
