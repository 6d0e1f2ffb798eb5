#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace agentdiff::text {

// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

// Length in Unicode scalar values.
std::size_t char_length(std::string_view s);

std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
std::string trim(std::string_view s);

// Collapses whitespace runs to one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Case-folded alphanumeric tokens. Any non-ASCII scalar counts as a word
// character; ASCII letters are folded to lower case.
std::vector<std::string> tokens(std::string_view s);

// Numeric literals as written ("1,200", "3.5", "7"), commas stripped.
std::vector<std::string> numbers(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

std::vector<std::string> split_lines(std::string_view s);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace agentdiff::text
