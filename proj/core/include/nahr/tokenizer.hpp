// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nahr/hash.hpp"

namespace nahr {

/// Prepended to every whitespace-delimited word before training and encoding.
inline constexpr std::string_view kWordBoundary = "▁";

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

/// Ids the span-corruption stage needs from a vocabulary.
struct SpecialTokens {
  TokenId pad = 0;
  TokenId eos = 1;
  TokenId unk = 2;
  std::uint32_t vocab_size = 0;
  std::uint32_t num_sentinels = 0;

  /// sentinel_0 is the highest id, counting down.
  TokenId sentinel(std::uint32_t index) const noexcept { return vocab_size - 1 - index; }
  bool is_sentinel(TokenId id) const noexcept {
    return id < vocab_size && id >= vocab_size - num_sentinels;
  }
  std::uint32_t sentinel_index(TokenId id) const noexcept { return vocab_size - 1 - id; }
};

/// Trained subword inventory. Id layout: pad=0, eos=1, unk=2, then pieces in
/// rank order, then sentinels with sentinel_0 = size()-1.
class SubwordVocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr std::uint32_t kFixedSpecials = 3;

  /// Validates: pieces unique and non-empty, and pieces + specials <= target_size.
  SubwordVocab(std::vector<std::string> pieces, std::uint32_t num_sentinels,
               std::uint32_t target_size);

  std::uint32_t size() const noexcept {
    return kFixedSpecials + static_cast<std::uint32_t>(pieces_.size()) + num_sentinels_;
  }
  std::uint32_t target_size() const noexcept { return target_size_; }
  std::uint32_t num_sentinels() const noexcept { return num_sentinels_; }
  const std::vector<std::string>& pieces() const noexcept { return pieces_; }
  SpecialTokens special_tokens() const noexcept;

  /// Id of a piece (not of a special).
  std::optional<TokenId> piece_id(std::string_view piece) const;
  /// Rank (creation order) of a piece.
  std::optional<std::uint32_t> piece_rank(std::string_view piece) const;
  TokenId sentinel_id(std::uint32_t index) const;
  bool is_sentinel(TokenId id) const noexcept { return special_tokens().is_sentinel(id); }

  /// Text form of one id: the piece, "<extra_id_N>" for sentinels, "<pad>",
  /// "</s>" or "<unk>" for the fixed specials. Throws on out-of-range ids.
  std::string id_to_string(TokenId id) const;

  std::string serialize() const;
  /// Throws Error when the file's invariants fail.
  static SubwordVocab parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static SubwordVocab load(const std::filesystem::path& path);

  Fingerprint128 fingerprint() const { return fingerprint128(serialize()); }

  bool operator==(const SubwordVocab& other) const {
    return pieces_ == other.pieces_ && num_sentinels_ == other.num_sentinels_ &&
           target_size_ == other.target_size_;
  }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, std::uint32_t> rank_;
  std::uint32_t num_sentinels_ = 0;
  std::uint32_t target_size_ = 0;
};

struct TokenizerTrainingConfig {
  std::uint32_t target_size = 8000;
  std::uint32_t num_sentinels = 100;
};

struct TrainedVocab {
  SubwordVocab vocab;
  /// Every merge applied, in order. May be longer than the piece list when a
  /// merge produced a string already in the inventory.
  std::vector<std::pair<std::string, std::string>> merges;
};

/// Byte-pair merge trainer over whitespace-pretokenized words.
class VocabTrainer {
 public:
  explicit VocabTrainer(TokenizerTrainingConfig config);

  void add_text(std::string_view text);
  std::uint64_t words_seen() const noexcept { return words_seen_; }

  /// Merges the most frequent adjacent pair (ties: lexicographically smallest
  /// merged string, then shorter left piece) until the vocabulary reaches target_size or no pair occurs
  /// at least twice. Throws ValidationError if the alphabet plus specials
  /// already exceeds target_size, or if no text was added.
  TrainedVocab train() const;

 private:
  TokenizerTrainingConfig config_;
  std::map<std::string, std::uint64_t> word_counts_;
  std::uint64_t words_seen_ = 0;
};

TrainedVocab train_vocab(std::span<const std::string> corpus, TokenizerTrainingConfig config);

/// Splits a word (boundary marker included) into code-point strings.
std::vector<std::string> split_code_points(std::string_view word);

/// Encoder with a per-word cache. Not thread-safe; give each worker its own.
class Encoder {
 public:
  explicit Encoder(const SubwordVocab& vocab, std::size_t cache_limit = 1 << 20);

  TokenSequence encode(std::string_view text);
  void encode_append(std::string_view text, TokenSequence& out);

 private:
  const std::vector<TokenId>& encode_word(std::string_view word);

  const SubwordVocab& vocab_;
  std::size_t cache_limit_;
  std::unordered_map<std::string, std::vector<TokenId>> cache_;
};

TokenSequence encode(const SubwordVocab& vocab, std::string_view text);
/// Inverse of encode up to whitespace normalization. Throws on ids >= vocab size.
std::string decode(const SubwordVocab& vocab, std::span<const TokenId> ids);

}  // namespace nahr
