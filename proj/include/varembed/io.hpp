// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace varembed::io {

// Writes through a sibling temporary file and renames it over `path`, so a
// reader never observes a half-written output.
void write_atomically(const std::string& path,
                      const std::function<void(std::ostream&)>& writer,
                      bool binary = false);

// Reads all lines of a text file. Throws InputError if it cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

// Splits on runs of ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view line);

std::vector<std::string> split(std::string_view line, char sep);

std::string_view trim(std::string_view s);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace varembed::io
