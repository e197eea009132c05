// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "nahr/error.hpp"
#include "nahr/hash.hpp"

namespace nahr {

enum class Source : std::uint8_t { cc, dialect, news, elkheir, other };

inline constexpr Source kAllSources[] = {Source::cc, Source::dialect, Source::news, Source::elkheir,
                                         Source::other};

std::string_view to_string(Source s) noexcept;
/// Accepts the canonical names (CC, DIALECT, NEWS, ELKHEIR, OTHER) case-insensitively,
/// plus "EL-KHEIR" and "OTHERS".
std::optional<Source> parse_source(std::string_view name);

struct RawRecord {
  std::string record_id;
  std::optional<std::string> uri;
  std::optional<std::chrono::sys_seconds> capture_time;
  std::string payload;
  std::uint64_t declared_length = 0;
  std::uint64_t offset = 0;             // byte offset of the record in its (decompressed) stream
  std::optional<Source> source_hint;    // set by JSONL lines carrying a `source` field
};

struct RecordError {
  std::uint64_t offset = 0;
  std::string message;
};

using ReadResult = std::variant<RawRecord, RecordError>;

struct Document {
  Fingerprint128 doc_id;
  Source source = Source::other;
  std::string text;
  std::size_t char_count = 0;
  double arabic_ratio = 0.0;

  std::uint64_t byte_size() const noexcept { return text.size(); }
};

/// Raised when a record cannot become a Document (empty after cleaning, or
/// too many invalid UTF-8 sequences).
class DocumentRejected : public Error {
 public:
  using Error::Error;
};

/// Share of U+FFFD replacements above which a payload is rejected.
inline constexpr double kMaxReplacementRatio = 0.01;

Document to_document(const RawRecord& record, Source source);
Document make_document(std::string_view payload, Source source);

/// Rebuilds a Document from text that is already normalized (shard reload).
Document document_from_normalized(std::string text, Source source);

// -- byte sources -----------------------------------------------------------

class ByteSource {
 public:
  virtual ~ByteSource() = default;
  /// Returns 0 only at end of stream.
  virtual std::size_t read(char* dst, std::size_t n) = 0;
};

/// Plain or gzip (possibly multi-member) file; compression is detected.
std::unique_ptr<ByteSource> open_file_source(const std::filesystem::path& path);
/// Wraps a stream; gzip input is detected from the magic bytes.
std::unique_ptr<ByteSource> make_stream_source(std::istream& in);

namespace detail {

/// Growable window over a ByteSource. Consumed bytes are compacted away, so
/// the footprint tracks the largest single record rather than the stream.
class BufferedInput {
 public:
  explicit BufferedInput(std::unique_ptr<ByteSource> src);

  /// Ensures `n` unread bytes are buffered; false if the stream ends first.
  bool ensure(std::size_t n);
  std::size_t available() const noexcept { return buf_.size() - pos_; }
  std::string_view peek(std::size_t n) const noexcept;
  void consume(std::size_t n) noexcept { pos_ += n; }
  std::uint64_t offset() const noexcept { return base_ + pos_; }
  /// Reads one line, stripping "\n" and a trailing "\r". nullopt at end of stream.
  std::optional<std::string> read_line();
  bool at_end();
  std::size_t capacity() const noexcept { return buf_.capacity(); }

 private:
  void compact();

  std::unique_ptr<ByteSource> src_;
  std::string buf_;
  std::size_t pos_ = 0;
  std::uint64_t base_ = 0;
  bool eof_ = false;
};

}  // namespace detail

/// Streaming reader for WET-style shards: a "WARC/x" version line, "Key: Value"
/// headers ended by a blank line, then Content-Length bytes of body. Only
/// `conversion` records (or records without WARC-Type) are yielded.
class WetReader {
 public:
  explicit WetReader(std::unique_ptr<ByteSource> src);
  static WetReader open(const std::filesystem::path& path);

  /// Next record or per-record error; nullopt once the stream is exhausted.
  std::optional<ReadResult> next();

  std::size_t buffer_capacity() const noexcept { return in_.capacity(); }

 private:
  void resync();

  detail::BufferedInput in_;
  bool done_ = false;
};

/// JSONL source: one object per line with `text` (required) and optional `id`, `url`, `source`.
class JsonlReader {
 public:
  explicit JsonlReader(std::unique_ptr<ByteSource> src);
  static JsonlReader open(const std::filesystem::path& path);

  std::optional<ReadResult> next();

 private:
  detail::BufferedInput in_;
  std::uint64_t line_no_ = 0;
};

std::string serialize_wet_record(const RawRecord& record);

/// Writes conversion records; gzip output when `compress` is set.
class WetWriter {
 public:
  WetWriter(const std::filesystem::path& path, bool compress);
  ~WetWriter();
  WetWriter(const WetWriter&) = delete;
  WetWriter& operator=(const WetWriter&) = delete;

  void write(const RawRecord& record);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nahr
