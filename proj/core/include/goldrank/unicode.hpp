#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Minimal UTF-8 utilities. All character offsets used across the library are
// counted in Unicode scalar values, never in bytes; invalid byte sequences
// decode to U+FFFD so no input can crash the pipeline.

namespace goldrank::unicode {

std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t char_count(std::string_view text);

/// Substring addressed in scalar values, [first_char, last_char).
/// Throws std::out_of_range when the window exceeds the text.
std::string substr_chars(std::string_view text, std::size_t first_char,
                         std::size_t last_char);

bool is_punctuation(char32_t cp);
bool is_whitespace(char32_t cp);
char32_t to_lower(char32_t cp);

}  // namespace goldrank::unicode
