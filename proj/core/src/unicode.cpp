// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/unicode.hpp"

#include <cctype>

#include <unicode/bytestream.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>

#include "nahr/error.hpp"

namespace nahr::unicode {
namespace {

const icu::Normalizer2& nfkc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw Error("ICU NFKC normalizer unavailable");
  return *n;
}

bool is_cont(unsigned char b) { return (b & 0xC0) == 0x80; }

// Length of a well-formed sequence starting at `i`, or 0 if ill-formed.
// On failure `bad` receives how many bytes to consume for the replacement.
std::size_t well_formed_length(std::string_view s, std::size_t i, std::size_t& bad) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  const std::size_t left = s.size() - i;
  bad = 1;
  if (b0 < 0x80) return 1;
  std::size_t need = 0;
  unsigned char lo = 0x80, hi = 0xBF;
  if (b0 >= 0xC2 && b0 <= 0xDF) {
    need = 2;
  } else if (b0 >= 0xE0 && b0 <= 0xEF) {
    need = 3;
    if (b0 == 0xE0) lo = 0xA0;
    if (b0 == 0xED) hi = 0x9F;
  } else if (b0 >= 0xF0 && b0 <= 0xF4) {
    need = 4;
    if (b0 == 0xF0) lo = 0x90;
    if (b0 == 0xF4) hi = 0x8F;
  } else {
    return 0;
  }
  for (std::size_t k = 1; k < need; ++k) {
    if (k >= left) {
      bad = k;
      return 0;
    }
    const auto b = static_cast<unsigned char>(s[i + k]);
    const bool ok = k == 1 ? (b >= lo && b <= hi) : is_cont(b);
    if (!ok) {
      bad = k;
      return 0;
    }
  }
  return need;
}

bool is_space_byte(char c) {
  return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

bool is_diacritic(char32_t cp) {
  return (cp >= 0x064B && cp <= 0x065F) || cp == 0x0670;
}

}  // namespace

LossyDecode decode_utf8_lossy(std::string_view bytes) {
  LossyDecode out;
  out.text.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    std::size_t bad = 0;
    const std::size_t len = well_formed_length(bytes, i, bad);
    if (len == 0) {
      append_utf8(out.text, kReplacementChar);
      ++out.replacements;
      i += bad;
    } else {
      out.text.append(bytes.substr(i, len));
      i += len;
    }
    ++out.code_points;
  }
  return out;
}

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    std::size_t bad = 0;
    const std::size_t len = well_formed_length(bytes, i, bad);
    if (len == 0) return false;
    i += len;
  }
  return true;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::size_t count_code_points(std::string_view utf8) noexcept {
  std::size_t n = 0;
  for (char c : utf8) n += !is_cont(static_cast<unsigned char>(c));
  return n;
}

bool is_white_space(char32_t cp) noexcept { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

bool is_control(char32_t cp) noexcept {
  return u_charType(static_cast<UChar32>(cp)) == U_CONTROL_CHAR;
}

bool is_decimal_digit(char32_t cp) noexcept {
  return u_charType(static_cast<UChar32>(cp)) == U_DECIMAL_DIGIT_NUMBER;
}

bool is_punctuation(char32_t cp) noexcept { return u_ispunct(static_cast<UChar32>(cp)); }

std::string nfkc(std::string_view utf8) {
  const auto& n = nfkc_instance();
  std::string out;
  out.reserve(utf8.size());
  icu::StringByteSink<std::string> sink(&out);
  UErrorCode status = U_ZERO_ERROR;
  n.normalizeUTF8(0, icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())), sink,
                  nullptr, status);
  if (U_FAILURE(status)) throw Error(std::string("NFKC normalization failed: ") + u_errorName(status));
  return out;
}

bool is_nfkc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const bool ok = nfkc_instance().isNormalizedUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())), status);
  return U_SUCCESS(status) && ok;
}

std::string clean_layout(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  bool pending_space = false;  // a space is owed before the next visible char
  bool line_has_text = false;
  std::size_t pos = 0;
  while (pos < utf8.size()) {
    const std::size_t start = pos;
    const auto b = static_cast<unsigned char>(utf8[pos]);
    char32_t cp;
    if (b < 0x80) {
      cp = b;
      ++pos;
    } else {
      cp = next_code_point(utf8, pos);
    }
    if (cp == '\n') {
      if (line_has_text) out.push_back('\n');
      line_has_text = false;
      pending_space = false;
      continue;
    }
    const bool space = cp < 0x80 ? (cp == ' ' || cp == '\t' || cp == '\r' || cp == '\f' ||
                                     cp == '\v' || cp == 0x1C || cp == 0x1D || cp == 0x1E ||
                                     cp == 0x1F)
                                  : is_white_space(cp);
    if (space) {
      pending_space = line_has_text;
      continue;
    }
    if (cp < 0x20 || cp == 0x7F || (cp >= 0x80 && is_control(cp))) continue;
    if (pending_space) out.push_back(' ');
    pending_space = false;
    line_has_text = true;
    out.append(utf8.substr(start, pos - start));
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string normalize_document_text(std::string_view utf8) {
  std::string text = clean_layout(utf8);
  for (int round = 0; round < 4; ++round) {
    if (is_nfkc(text)) {
      std::string again = clean_layout(text);
      if (again == text) return text;
      text = std::move(again);
      continue;
    }
    text = clean_layout(nfkc(text));
  }
  return text;
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space_byte(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space_byte(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::string normalize_answer(std::string_view utf8) {
  const std::string folded = nfkc(decode_utf8_lossy(utf8).text);
  std::string mapped;
  mapped.reserve(folded.size());
  std::size_t pos = 0;
  while (pos < folded.size()) {
    char32_t cp = next_code_point(folded, pos);
    if (is_diacritic(cp) || cp == 0x0640) continue;
    if (cp == 0x0623 || cp == 0x0625 || cp == 0x0622) cp = 0x0627;
    if (cp == 0x0629) cp = 0x0647;
    if (is_punctuation(cp) || is_white_space(cp) || is_control(cp) || (cp < 0x80 && std::ispunct(static_cast<int>(cp)))) {
      cp = ' ';
    }
    append_utf8(mapped, cp);
  }
  std::string out;
  for (auto w : split_words(mapped)) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  }
  return out;
}

}  // namespace nahr::unicode
