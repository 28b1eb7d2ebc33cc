#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace docdial {

// All file offsets in the corpus formats count Unicode scalar values, not
// bytes. These helpers walk UTF-8 lead bytes; input is assumed well-formed
// (continuation bytes of an invalid sequence are simply skipped).

inline bool utf8_is_continuation(unsigned char b) { return (b & 0xC0) == 0x80; }

inline int64_t utf8_length(std::string_view s) {
  int64_t n = 0;
  for (unsigned char b : s) {
    if (!utf8_is_continuation(b)) ++n;
  }
  return n;
}

// Byte index of the code point with index `cp`, or s.size() when past the end.
inline size_t utf8_byte_offset(std::string_view s, int64_t cp) {
  if (cp <= 0) return 0;
  int64_t seen = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!utf8_is_continuation(static_cast<unsigned char>(s[i]))) {
      if (seen == cp) return i;
      ++seen;
    }
  }
  return s.size();
}

// Substring [begin, end) in code-point coordinates.
inline std::string utf8_slice(std::string_view s, int64_t begin, int64_t end) {
  if (end <= begin) return {};
  size_t b = utf8_byte_offset(s, begin);
  size_t e = utf8_byte_offset(s, end);
  return std::string(s.substr(b, e - b));
}

}  // namespace docdial
