#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace intentflow::text {

// Delimiters are Unicode whitespace and punctuation. The underscore is a word
// character so that entity tags such as [HOTEL_NAME] stay a single token.
bool is_delimiter(char32_t cp) noexcept;

// Decodes the code point starting at byte `pos`. Invalid sequences decode as
// a single byte with value U+FFFD. `length` receives the byte length.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& length) noexcept;

std::string ascii_lower(std::string_view s);
std::string ascii_upper(std::string_view s);
std::string trim(std::string_view s);
std::size_t codepoint_count(std::string_view s) noexcept;

// boundary[p] is true when byte offset p starts or ends a token: p is 0 or
// size(), or a delimiter code point ends at p or starts at p. Offsets inside a
// multi-byte code point are never boundaries.
std::vector<bool> token_boundaries(std::string_view s);

// Lowercased tokens split on delimiters.
std::vector<std::string> tokenize(std::string_view s);

}  // namespace intentflow::text
