#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lmf {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Strict decimal parse of the whole token; throws Error(MalformedFile).
double parse_double(std::string_view token);

std::string_view trim(std::string_view text);

/// Splits a text buffer into lines, accepting LF and CRLF endings.
std::vector<std::string_view> split_lines(std::string_view text);

/// One CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_row(std::string_view line);

/// Quotes a field only when it contains a comma, quote, or line break.
std::string csv_escape(std::string_view field);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace lmf
