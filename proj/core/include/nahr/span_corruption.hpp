// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nahr/tokenizer.hpp"

namespace nahr {

struct NoiseSpec {
  double noise_density = 0.15;
  double mean_span_length = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const NoiseSpec&) const = default;
};

struct SpanCorruptionExample {
  TokenSequence input_ids;   // spans replaced by sentinel_0, sentinel_1, ...
  TokenSequence target_ids;  // sentinel_i followed by span i, ..., then eos

  bool operator==(const SpanCorruptionExample&) const = default;
};

struct CorruptionCounts {
  std::size_t corrupted = 0;
  std::size_t spans = 0;
};

/// corrupted = round(len * density) clamped to [1, len-1];
/// spans = max(1, round(corrupted / mean_span_length)), capped so that the
/// spans fit without touching each other.
CorruptionCounts corruption_counts(std::size_t length, const NoiseSpec& spec);

/// Deterministic in (tokens, spec.seed, counter). Throws ValidationError for
/// sequences shorter than 2 tokens and Error when the spans would need more
/// sentinels than the vocabulary has.
SpanCorruptionExample corrupt(std::span<const TokenId> tokens, const NoiseSpec& spec,
                              const SpecialTokens& special, std::uint64_t counter);

/// Reinserts target spans at their sentinels. Throws Error on malformed structure.
TokenSequence splice(const SpanCorruptionExample& example, const SpecialTokens& special);

/// Structural check: sentinels numbered 0.. in order in both halves, matching
/// counts, non-empty spans, target ends with eos, no padding inside.
bool has_valid_sentinel_structure(std::span<const TokenId> input, std::span<const TokenId> target,
                                  const SpecialTokens& special);

/// Splits a token stream into pieces of at most seq_len tokens. Splits happen
/// before corruption, so no span can straddle a boundary. Tails shorter than
/// two tokens are dropped.
std::vector<std::span<const TokenId>> chunk_for_packing(std::span<const TokenId> tokens,
                                                        std::size_t seq_len);

/// Longest target any chunk of at most seq_len tokens can produce.
std::size_t max_target_length(std::size_t seq_len, const NoiseSpec& spec);

inline constexpr std::size_t kMinSeqLen = 16;

struct PackedExample {
  TokenSequence input_ids;   // exactly seq_len
  TokenSequence target_ids;  // exactly target_len
  std::uint32_t input_len = 0;   // tokens before padding
  std::uint32_t target_len = 0;

  bool operator==(const PackedExample&) const = default;
};

/// Pads every example to fixed lengths. Throws ValidationError for
/// seq_len < 16 or an example that does not fit.
std::vector<PackedExample> pack_examples(std::span<const SpanCorruptionExample> examples,
                                         std::size_t seq_len, std::size_t target_len, TokenId pad);

// -- output formats ---------------------------------------------------------------------

inline constexpr std::string_view kExampleFileMagic = "NAHRSC01";

/// Length-prefixed little-endian records: magic, u32 version, then per record
/// u32 n_input, n_input x u32, u32 n_target, n_target x u32.
class ExampleWriter {
 public:
  ExampleWriter(const std::filesystem::path& path, std::optional<std::filesystem::path> debug_jsonl);
  void write(std::span<const TokenId> input, std::span<const TokenId> target);
  void write(const PackedExample& ex) { write(ex.input_ids, ex.target_ids); }
  void close();
  std::uint64_t records() const noexcept { return records_; }
  std::uint64_t bytes() const noexcept { return bytes_; }

 private:
  std::ofstream out_;
  std::optional<std::ofstream> debug_;
  std::uint64_t records_ = 0;
  std::uint64_t bytes_ = 0;
};

class ExampleReader {
 public:
  explicit ExampleReader(const std::filesystem::path& path);
  std::optional<SpanCorruptionExample> next();

 private:
  std::ifstream in_;
};

struct ExampleSidecar {
  NoiseSpec spec;
  std::uint32_t seq_len = 0;
  std::uint32_t target_len = 0;
  std::uint32_t vocab_size = 0;
  std::uint32_t num_sentinels = 0;
  std::uint64_t examples = 0;
  std::uint64_t tokens = 0;
  std::uint64_t corrupted_tokens = 0;
  std::vector<std::string> files;
};

std::string sidecar_to_json(const ExampleSidecar& sidecar);

}  // namespace nahr
