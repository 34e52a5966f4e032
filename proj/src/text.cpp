#include "intentflow/text.hpp"

#include <algorithm>

namespace intentflow::text {

namespace {

bool is_unicode_space(char32_t cp) noexcept {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_unicode_punct(char32_t cp) noexcept {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60 && cp != '_') || (cp >= 0x7B && cp <= 0x7E);
  }
  // Latin-1 punctuation and symbols, General Punctuation, CJK punctuation,
  // fullwidth ASCII punctuation.
  if ((cp >= 0xA1 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2010 && cp <= 0x205E) return true;
  if (cp >= 0x3001 && cp <= 0x303F) return true;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;
  return false;
}

}  // namespace

bool is_delimiter(char32_t cp) noexcept { return is_unicode_space(cp) || is_unicode_punct(cp); }

char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& length) noexcept {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  length = 1;
  if (b0 < 0x80) return b0;
  std::size_t need = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    need = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    need = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    need = 3;
    cp = b0 & 0x07;
  } else {
    return 0xFFFD;
  }
  for (std::size_t i = 1; i <= need; ++i) {
    if (pos + i >= s.size()) return 0xFFFD;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return 0xFFFD;
    cp = (cp << 6) | (b & 0x3F);
  }
  length = need + 1;
  return cp;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string ascii_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  return out;
}

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end) {
    std::size_t len = 0;
    if (!is_unicode_space(decode_utf8(s, begin, len))) break;
    begin += len;
  }
  // Walk back to the start of the last code point before testing it.
  while (end > begin) {
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
    std::size_t len = 0;
    if (!is_unicode_space(decode_utf8(s, start, len))) break;
    end = start;
  }
  return std::string(s.substr(begin, end - begin));
}

std::size_t codepoint_count(std::string_view s) noexcept {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size();) {
    std::size_t len = 0;
    decode_utf8(s, pos, len);
    pos += len;
    ++n;
  }
  return n;
}

std::vector<bool> token_boundaries(std::string_view s) {
  std::vector<bool> boundary(s.size() + 1, false);
  boundary[0] = true;
  boundary[s.size()] = true;
  for (std::size_t pos = 0; pos < s.size();) {
    std::size_t len = 0;
    const char32_t cp = decode_utf8(s, pos, len);
    if (is_delimiter(cp)) {
      boundary[pos] = true;
      boundary[pos + len] = true;
    }
    pos += len;
  }
  return boundary;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t pos = 0; pos < s.size();) {
    std::size_t len = 0;
    const char32_t cp = decode_utf8(s, pos, len);
    if (is_delimiter(cp)) {
      if (!current.empty()) tokens.push_back(ascii_lower(current));
      current.clear();
    } else {
      current.append(s.substr(pos, len));
    }
    pos += len;
  }
  if (!current.empty()) tokens.push_back(ascii_lower(current));
  return tokens;
}

}  // namespace intentflow::text
