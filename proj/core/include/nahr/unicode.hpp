// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nahr::unicode {

inline constexpr char32_t kReplacementChar = 0xFFFD;

struct LossyDecode {
  std::string text;  // valid UTF-8
  std::size_t code_points = 0;
  std::size_t replacements = 0;
};

/// Decodes arbitrary bytes as UTF-8. Each ill-formed subsequence (overlong
/// forms, surrogates, values above U+10FFFF, truncated sequences) becomes a
/// single U+FFFD.
LossyDecode decode_utf8_lossy(std::string_view bytes);

bool is_valid_utf8(std::string_view bytes);

void append_utf8(std::string& out, char32_t cp);

/// Reads the code point at `pos` of a valid UTF-8 string and advances `pos`.
inline char32_t next_code_point(std::string_view s, std::size_t& pos) noexcept {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  if (b0 < 0xE0) {
    const char32_t cp = ((b0 & 0x1Fu) << 6) | (static_cast<unsigned char>(s[pos + 1]) & 0x3Fu);
    pos += 2;
    return cp;
  }
  if (b0 < 0xF0) {
    const char32_t cp = ((b0 & 0x0Fu) << 12) |
                        ((static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 6) |
                        (static_cast<unsigned char>(s[pos + 2]) & 0x3Fu);
    pos += 3;
    return cp;
  }
  const char32_t cp = ((b0 & 0x07u) << 18) |
                      ((static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 12) |
                      ((static_cast<unsigned char>(s[pos + 2]) & 0x3Fu) << 6) |
                      (static_cast<unsigned char>(s[pos + 3]) & 0x3Fu);
  pos += 4;
  return cp;
}

std::size_t count_code_points(std::string_view utf8) noexcept;

/// Arabic (U+0600–06FF), Arabic Supplement (0750–077F), Arabic Extended-A
/// (08A0–08FF) and the presentation-form blocks (FB50–FDFF, FE70–FEFF).
constexpr bool is_arabic(char32_t cp) noexcept {
  return (cp >= 0x0600 && cp <= 0x06FF) || (cp >= 0x0750 && cp <= 0x077F) ||
         (cp >= 0x08A0 && cp <= 0x08FF) || (cp >= 0xFB50 && cp <= 0xFDFF) ||
         (cp >= 0xFE70 && cp <= 0xFEFF);
}

bool is_white_space(char32_t cp) noexcept;
bool is_control(char32_t cp) noexcept;
bool is_decimal_digit(char32_t cp) noexcept;
bool is_punctuation(char32_t cp) noexcept;

std::string nfkc(std::string_view utf8);
bool is_nfkc(std::string_view utf8);

/// Drops control characters other than '\n', maps every other whitespace
/// character to ' ', collapses runs of spaces, trims each line and removes
/// empty lines.
std::string clean_layout(std::string_view utf8);

/// Full document normalization: layout cleaning plus NFKC, iterated to a
/// fixed point so the result is stable under re-normalization.
std::string normalize_document_text(std::string_view utf8);

/// Splits on ASCII whitespace. Views point into `text`.
std::vector<std::string_view> split_words(std::string_view text);

/// Arabic answer normalization for QA scoring: NFKC, diacritics and tatweel
/// removed, alef variants folded to bare alef, ta marbuta to ha, punctuation
/// and ASCII symbols replaced by spaces. Returns whitespace-joined tokens.
std::string normalize_answer(std::string_view utf8);

}  // namespace nahr::unicode
