// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/ingest.hpp"

#include <fmt/format.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>

#include <nlohmann/json.hpp>

#include "nahr/unicode.hpp"

namespace nahr {
namespace {

constexpr std::size_t kReadChunk = 1 << 16;

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// "YYYY-MM-DDThh:mm:ssZ" (fractional seconds ignored).
std::optional<std::chrono::sys_seconds> parse_warc_date(std::string_view v) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const std::string tmp(v);
  if (std::sscanf(tmp.c_str(), "%d-%u-%uT%u:%u:%u", &y, &mo, &d, &h, &mi, &s) != 6) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo},
                                        std::chrono::day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} +
         std::chrono::seconds{s};
}

std::string format_warc_date(std::chrono::sys_seconds t) {
  const auto days = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{t - days};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

class GzFileSource final : public ByteSource {
 public:
  explicit GzFileSource(const std::filesystem::path& path) : file_(gzopen(path.c_str(), "rb")) {
    if (file_ == nullptr) throw Error("cannot open " + path.string());
    gzbuffer(file_, 1 << 17);
  }
  ~GzFileSource() override { gzclose(file_); }
  GzFileSource(const GzFileSource&) = delete;
  GzFileSource& operator=(const GzFileSource&) = delete;

  std::size_t read(char* dst, std::size_t n) override {
    const int got = gzread(file_, dst, static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30)));
    if (got < 0) {
      int errnum = 0;
      throw Error(std::string("gzip read failed: ") + gzerror(file_, &errnum));
    }
    return static_cast<std::size_t>(got);
  }

 private:
  gzFile file_;
};

class IstreamSource final : public ByteSource {
 public:
  explicit IstreamSource(std::istream& in) : in_(in) {}
  std::size_t read(char* dst, std::size_t n) override {
    in_.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in_.gcount());
  }

 private:
  std::istream& in_;
};

// Inflates gzip members from another source, continuing across member boundaries.
class InflateSource final : public ByteSource {
 public:
  explicit InflateSource(std::unique_ptr<ByteSource> inner) : inner_(std::move(inner)) {
    if (inflateInit2(&zs_, 15 + 32) != Z_OK) throw Error("zlib inflateInit failed");
  }
  ~InflateSource() override { inflateEnd(&zs_); }
  InflateSource(const InflateSource&) = delete;
  InflateSource& operator=(const InflateSource&) = delete;

  std::size_t read(char* dst, std::size_t n) override {
    zs_.next_out = reinterpret_cast<Bytef*>(dst);
    zs_.avail_out = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    while (zs_.avail_out > 0) {
      if (zs_.avail_in == 0) {
        if (in_eof_) break;
        const std::size_t got = inner_->read(inbuf_.data(), inbuf_.size());
        if (got == 0) {
          in_eof_ = true;
          break;
        }
        zs_.next_in = reinterpret_cast<Bytef*>(inbuf_.data());
        zs_.avail_in = static_cast<uInt>(got);
      }
      const int rc = inflate(&zs_, Z_NO_FLUSH);
      if (rc == Z_STREAM_END) {
        inflateReset(&zs_);
      } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
        throw Error(std::string("gzip stream corrupt: ") + (zs_.msg ? zs_.msg : "unknown"));
      } else if (rc == Z_BUF_ERROR && zs_.avail_in == 0 && in_eof_) {
        break;
      }
    }
    return static_cast<std::size_t>(reinterpret_cast<char*>(zs_.next_out) - dst);
  }

 private:
  std::unique_ptr<ByteSource> inner_;
  z_stream zs_{};
  std::array<char, kReadChunk> inbuf_{};
  bool in_eof_ = false;
};

// Replays a few already-read bytes before delegating.
class PrefixedSource final : public ByteSource {
 public:
  PrefixedSource(std::string prefix, std::unique_ptr<ByteSource> inner)
      : prefix_(std::move(prefix)), inner_(std::move(inner)) {}
  std::size_t read(char* dst, std::size_t n) override {
    if (used_ < prefix_.size()) {
      const std::size_t k = std::min(n, prefix_.size() - used_);
      std::copy_n(prefix_.data() + used_, k, dst);
      used_ += k;
      return k;
    }
    return inner_->read(dst, n);
  }

 private:
  std::string prefix_;
  std::size_t used_ = 0;
  std::unique_ptr<ByteSource> inner_;
};

}  // namespace

std::string_view to_string(Source s) noexcept {
  switch (s) {
    case Source::cc: return "CC";
    case Source::dialect: return "DIALECT";
    case Source::news: return "NEWS";
    case Source::elkheir: return "ELKHEIR";
    case Source::other: return "OTHER";
  }
  return "OTHER";
}

std::optional<Source> parse_source(std::string_view name) {
  for (Source s : kAllSources) {
    if (iequals(name, to_string(s))) return s;
  }
  if (iequals(name, "EL-KHEIR")) return Source::elkheir;
  if (iequals(name, "OTHERS")) return Source::other;
  return std::nullopt;
}

Document make_document(std::string_view payload, Source source) {
  auto decoded = unicode::decode_utf8_lossy(payload);
  if (decoded.code_points > 0 &&
      static_cast<double>(decoded.replacements) >
          kMaxReplacementRatio * static_cast<double>(decoded.code_points)) {
    throw DocumentRejected(fmt::format("too many invalid UTF-8 sequences ({} of {} code points)",
                                       decoded.replacements, decoded.code_points));
  }
  std::string text = unicode::normalize_document_text(decoded.text);
  if (text.empty()) throw DocumentRejected("empty document");
  return document_from_normalized(std::move(text), source);
}

Document document_from_normalized(std::string text, Source source) {
  Document doc;
  doc.source = source;
  std::size_t chars = 0, arabic = 0, pos = 0;
  while (pos < text.size()) {
    const auto b = static_cast<unsigned char>(text[pos]);
    if (b < 0x80) {
      ++pos;
    } else {
      arabic += unicode::is_arabic(unicode::next_code_point(text, pos));
    }
    ++chars;
  }
  if (chars == 0) throw DocumentRejected("empty document");
  doc.char_count = chars;
  doc.arabic_ratio = static_cast<double>(arabic) / static_cast<double>(chars);
  doc.doc_id = fingerprint128(text);
  doc.text = std::move(text);
  return doc;
}

Document to_document(const RawRecord& record, Source source) {
  return make_document(record.payload, source);
}

std::unique_ptr<ByteSource> open_file_source(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error("no such file: " + path.string());
  return std::make_unique<GzFileSource>(path);
}

std::unique_ptr<ByteSource> make_stream_source(std::istream& in) {
  auto raw = std::make_unique<IstreamSource>(in);
  std::string head(2, '\0');
  std::size_t got = 0;
  while (got < 2) {
    const std::size_t k = raw->read(head.data() + got, 2 - got);
    if (k == 0) break;
    got += k;
  }
  head.resize(got);
  const bool gzip = got == 2 && static_cast<unsigned char>(head[0]) == 0x1f &&
                    static_cast<unsigned char>(head[1]) == 0x8b;
  auto prefixed = std::make_unique<PrefixedSource>(std::move(head), std::move(raw));
  if (gzip) return std::make_unique<InflateSource>(std::move(prefixed));
  return prefixed;
}

// -- BufferedInput ------------------------------------------------------------

namespace detail {

BufferedInput::BufferedInput(std::unique_ptr<ByteSource> src) : src_(std::move(src)) {}

void BufferedInput::compact() {
  if (pos_ == 0) return;
  base_ += pos_;
  buf_.erase(0, pos_);
  pos_ = 0;
}

bool BufferedInput::ensure(std::size_t n) {
  if (available() >= n) return true;
  if (eof_) return false;
  if (pos_ > 0 && (pos_ >= kReadChunk || pos_ * 2 >= buf_.size())) compact();
  while (available() < n && !eof_) {
    const std::size_t want = std::max(kReadChunk, n - available());
    const std::size_t old = buf_.size();
    buf_.resize(old + want);
    const std::size_t got = src_->read(buf_.data() + old, want);
    buf_.resize(old + got);
    if (got == 0) eof_ = true;
  }
  return available() >= n;
}

std::string_view BufferedInput::peek(std::size_t n) const noexcept {
  return std::string_view(buf_).substr(pos_, std::min(n, available()));
}

bool BufferedInput::at_end() { return !ensure(1); }

std::optional<std::string> BufferedInput::read_line() {
  if (!ensure(1)) return std::nullopt;
  std::size_t scanned = 0;
  for (;;) {
    const std::string_view window(buf_.data() + pos_, available());
    const auto nl = window.find('\n', scanned);
    if (nl != std::string_view::npos) {
      std::string line(window.substr(0, nl));
      consume(nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    scanned = window.size();
    if (!ensure(available() + 1)) {
      std::string line(buf_.data() + pos_, available());
      consume(available());
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
  }
}

}  // namespace detail

// -- WetReader ------------------------------------------------------------------

WetReader::WetReader(std::unique_ptr<ByteSource> src) : in_(std::move(src)) {}

WetReader WetReader::open(const std::filesystem::path& path) {
  return WetReader(open_file_source(path));
}

void WetReader::resync() {
  for (;;) {
    if (!in_.ensure(5)) {
      in_.consume(in_.available());
      return;
    }
    if (in_.peek(5) == "WARC/") return;
    if (!in_.read_line()) return;
  }
}

std::optional<ReadResult> WetReader::next() {
  while (!done_) {
    while (in_.ensure(1)) {
      const char c = in_.peek(1)[0];
      if (c != '\r' && c != '\n') break;
      in_.consume(1);
    }
    if (in_.at_end()) {
      done_ = true;
      break;
    }
    const std::uint64_t offset = in_.offset();
    auto version = in_.read_line();
    if (!version || !version->starts_with("WARC/")) {
      resync();
      return RecordError{offset, "expected a WARC version line"};
    }

    std::optional<std::uint64_t> length;
    bool length_bad = false;
    std::string type, record_id, uri, date;
    bool header_done = false;
    while (auto line = in_.read_line()) {
      if (line->empty()) {
        header_done = true;
        break;
      }
      const auto colon = line->find(':');
      if (colon == std::string::npos) continue;
      const std::string_view key = trim(std::string_view(*line).substr(0, colon));
      const std::string_view value = trim(std::string_view(*line).substr(colon + 1));
      if (iequals(key, "Content-Length")) {
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec == std::errc() && p == value.data() + value.size()) {
          length = v;
        } else {
          length_bad = true;
        }
      } else if (iequals(key, "WARC-Type")) {
        type = value;
      } else if (iequals(key, "WARC-Record-ID")) {
        record_id = value;
      } else if (iequals(key, "WARC-Target-URI")) {
        uri = value;
      } else if (iequals(key, "WARC-Date")) {
        date = value;
      }
    }
    if (!header_done) {
      done_ = true;
      return RecordError{offset, "truncated record header"};
    }
    if (!length || length_bad) {
      resync();
      return RecordError{offset, "malformed header: missing or invalid Content-Length"};
    }
    if (!in_.ensure(*length)) {
      const std::size_t avail = in_.available();
      in_.consume(avail);
      done_ = true;
      return RecordError{offset, fmt::format("truncated record: expected {} body bytes, {} available",
                                             *length, avail)};
    }
    std::string body(in_.peek(*length));
    in_.consume(*length);

    while (in_.ensure(1)) {
      const char c = in_.peek(1)[0];
      if (c != '\r' && c != '\n') break;
      in_.consume(1);
    }
    if (!in_.at_end() && !(in_.ensure(5) && in_.peek(5) == "WARC/")) {
      resync();
      return RecordError{offset, fmt::format("declared length {} does not match record body", *length)};
    }

    if (!type.empty() && !iequals(type, "conversion")) continue;
    if (body.empty()) return RecordError{offset, "empty payload"};

    RawRecord rec;
    rec.record_id = record_id.empty() ? fmt::format("offset:{}", offset) : record_id;
    if (!uri.empty()) rec.uri = uri;
    if (!date.empty()) rec.capture_time = parse_warc_date(date);
    rec.declared_length = *length;
    rec.offset = offset;
    rec.payload = std::move(body);
    return rec;
  }
  return std::nullopt;
}

// -- JsonlReader ----------------------------------------------------------------

JsonlReader::JsonlReader(std::unique_ptr<ByteSource> src) : in_(std::move(src)) {}

JsonlReader JsonlReader::open(const std::filesystem::path& path) {
  return JsonlReader(open_file_source(path));
}

std::optional<ReadResult> JsonlReader::next() {
  for (;;) {
    const std::uint64_t offset = in_.offset();
    auto line = in_.read_line();
    if (!line) return std::nullopt;
    ++line_no_;
    if (trim(*line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::parse_error& e) {
      return RecordError{offset, fmt::format("line {}: invalid JSON ({})", line_no_, e.what())};
    }
    if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string()) {
      return RecordError{offset, fmt::format("line {}: missing string field `text`", line_no_)};
    }
    RawRecord rec;
    rec.payload = obj["text"].get<std::string>();
    rec.declared_length = rec.payload.size();
    rec.offset = offset;
    if (auto it = obj.find("id"); it != obj.end()) {
      rec.record_id = it->is_string() ? it->get<std::string>() : it->dump();
    } else {
      rec.record_id = fmt::format("line:{}", line_no_);
    }
    if (auto it = obj.find("url"); it != obj.end() && it->is_string()) rec.uri = it->get<std::string>();
    if (auto it = obj.find("source"); it != obj.end() && it->is_string()) {
      rec.source_hint = parse_source(it->get<std::string>());
      if (!rec.source_hint) {
        return RecordError{offset, fmt::format("line {}: unknown source `{}`", line_no_,
                                               it->get<std::string>())};
      }
    }
    if (rec.payload.empty()) return RecordError{offset, fmt::format("line {}: empty text", line_no_)};
    return rec;
  }
}

// -- writer ---------------------------------------------------------------------

std::string serialize_wet_record(const RawRecord& record) {
  std::string out = "WARC/1.0\r\nWARC-Type: conversion\r\n";
  if (!record.record_id.empty()) out += "WARC-Record-ID: " + record.record_id + "\r\n";
  if (record.uri) out += "WARC-Target-URI: " + *record.uri + "\r\n";
  if (record.capture_time) out += "WARC-Date: " + format_warc_date(*record.capture_time) + "\r\n";
  out += "Content-Type: text/plain\r\n";
  out += fmt::format("Content-Length: {}\r\n\r\n", record.payload.size());
  out += record.payload;
  out += "\r\n\r\n";
  return out;
}

struct WetWriter::Impl {
  gzFile gz = nullptr;
  std::ofstream plain;
};

WetWriter::WetWriter(const std::filesystem::path& path, bool compress) : impl_(std::make_unique<Impl>()) {
  if (compress) {
    impl_->gz = gzopen(path.c_str(), "wb1");
    if (impl_->gz == nullptr) throw Error("cannot create " + path.string());
  } else {
    impl_->plain.open(path, std::ios::binary | std::ios::trunc);
    if (!impl_->plain) throw Error("cannot create " + path.string());
  }
}

WetWriter::~WetWriter() {
  try {
    close();
  } catch (...) {
  }
}

void WetWriter::write(const RawRecord& record) {
  if (record.payload.empty()) throw ValidationError("WET record payload must be non-empty");
  const std::string bytes = serialize_wet_record(record);
  if (impl_->gz != nullptr) {
    if (gzwrite(impl_->gz, bytes.data(), static_cast<unsigned>(bytes.size())) !=
        static_cast<int>(bytes.size())) {
      throw Error("gzip write failed");
    }
  } else {
    impl_->plain.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!impl_->plain) throw Error("write failed");
  }
}

void WetWriter::close() {
  if (impl_->gz != nullptr) {
    gzclose(impl_->gz);
    impl_->gz = nullptr;
  }
  if (impl_->plain.is_open()) impl_->plain.close();
}

}  // namespace nahr
