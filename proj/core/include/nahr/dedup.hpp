// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nahr/hash.hpp"
#include "nahr/ingest.hpp"

namespace nahr {

enum class DedupGranularity : std::uint8_t { document, paragraph };

struct MinHashParams {
  std::uint32_t k = 256;
  std::uint32_t bands = 32;
  std::uint32_t rows = 8;
  std::uint32_t shingle_n = 5;
  double jaccard_threshold = 0.8;
  std::uint64_t seed = 0;
  /// Verify LSH candidates with exact shingle Jaccard instead of the
  /// signature estimate. Keeps every kept document's shingle set in memory.
  bool exact_verify = false;
  DedupGranularity granularity = DedupGranularity::document;

  void validate() const;
  bool operator==(const MinHashParams&) const = default;
};

struct MinHashSignature {
  std::uint32_t shingle_n = 0;
  std::vector<std::uint64_t> values;  // one minimum per permutation

  std::size_t k() const noexcept { return values.size(); }
  bool operator==(const MinHashSignature&) const = default;
};

/// Thrown by shingling when a text has fewer than shingle_n words.
class TooShortToShingle : public Error {
 public:
  using Error::Error;
};

/// Sorted, duplicate-free 64-bit hashes of the word n-grams of `text`.
std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::uint32_t n);

/// The k hash functions of a run, derived from one seed by counter mixing.
class PermutationFamily {
 public:
  PermutationFamily(std::uint32_t k, std::uint64_t seed);

  std::uint32_t k() const noexcept { return static_cast<std::uint32_t>(mul_.size()); }
  /// Minimum of every permutation over the given shingle hashes.
  std::vector<std::uint64_t> minima(std::span<const std::uint64_t> shingles) const;

 private:
  std::vector<std::uint64_t> mul_;
  std::vector<std::uint64_t> add_;
};

class MinHasher {
 public:
  explicit MinHasher(const MinHashParams& params);

  /// Throws TooShortToShingle.
  MinHashSignature signature(std::string_view text) const;
  MinHashSignature signature(const Document& doc) const { return signature(doc.text); }

  const MinHashParams& params() const noexcept { return params_; }

 private:
  MinHashParams params_;
  PermutationFamily family_;
};

/// Fraction of positions where the two signatures agree.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

Fingerprint128 exact_fingerprint(const Document& doc);

/// On-disk index layout version.
inline constexpr std::uint32_t kDedupIndexFormatVersion = 1;

/// Exact-fingerprint set plus LSH band tables over kept documents.
class DedupIndex {
 public:
  explicit DedupIndex(const MinHashParams& params);

  const MinHashParams& params() const noexcept { return params_; }

  bool contains_exact(const Fingerprint128& fp) const { return exact_.contains(fp); }
  /// Insert-if-absent; false when the fingerprint was already present.
  bool insert_exact(const Fingerprint128& fp) { return exact_.insert(fp).second; }

  /// Kept documents sharing at least one band bucket with `sig`, ascending, unique.
  std::vector<std::uint32_t> candidates(const MinHashSignature& sig) const;
  /// Estimated Jaccard against an indexed document.
  double similarity(std::uint32_t slot, const MinHashSignature& sig) const;
  const Fingerprint128& slot_id(std::uint32_t slot) const { return slot_ids_[slot]; }

  std::uint32_t add(const Fingerprint128& id, const MinHashSignature& sig);

  std::size_t exact_size() const noexcept { return exact_.size(); }
  std::size_t slots() const noexcept { return slot_ids_.size(); }

  /// Spills to `dir` as a sorted fingerprint file and an LSH bucket file.
  void save(const std::filesystem::path& dir) const;
  static DedupIndex load(const std::filesystem::path& dir);

 private:
  std::uint64_t band_key(const MinHashSignature& sig, std::uint32_t band) const;

  MinHashParams params_;
  std::unordered_set<Fingerprint128, Fingerprint128Hash> exact_;
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> bands_;
  // High 32 bits of each kept signature; enough to compare positions.
  std::vector<std::uint32_t> compact_sigs_;
  std::vector<Fingerprint128> slot_ids_;
};

enum class DedupOutcome : std::uint8_t { kept, exact_duplicate, near_duplicate };

struct DedupDecision {
  DedupOutcome outcome = DedupOutcome::kept;
  std::optional<Fingerprint128> witness;  // earlier kept document that caused the drop
  double similarity = 0.0;
  bool shingled = true;  // false when the text was too short for near-dup checks
};

struct DedupReport {
  std::uint64_t exact_dropped = 0;
  std::uint64_t near_dropped = 0;
  std::uint64_t kept = 0;
  std::uint64_t too_short = 0;  // kept documents checked by exact fingerprint only

  std::uint64_t total() const noexcept { return exact_dropped + near_dropped + kept; }
  bool operator==(const DedupReport&) const = default;
};

/// First-occurrence-wins deduplicator. Documents must be offered in stream
/// order; signatures may be computed ahead of time on other threads.
class Deduplicator {
 public:
  explicit Deduplicator(const MinHashParams& params);

  /// In paragraph mode, lines seen earlier in the stream are removed from
  /// `doc` before the document-level checks.
  DedupDecision offer(Document& doc);
  DedupDecision offer(Document& doc, std::optional<MinHashSignature> precomputed);

  const MinHasher& hasher() const noexcept { return hasher_; }
  const DedupReport& report() const noexcept { return report_; }
  const DedupIndex& index() const noexcept { return index_; }

 private:
  bool strip_seen_paragraphs(Document& doc);

  MinHasher hasher_;
  DedupIndex index_;
  DedupReport report_;
  std::unordered_set<Fingerprint128, Fingerprint128Hash> paragraphs_;
  std::vector<std::vector<std::uint64_t>> shingle_sets_;  // exact_verify only, by slot
};

struct DedupResult {
  std::vector<Document> kept;
  std::vector<DedupDecision> decisions;  // one per input, in input order
  DedupReport report;
};

/// Batch form. With workers > 1 signatures are computed in parallel and
/// committed in input order, so the result equals the serial one.
DedupResult dedup_stream(std::vector<Document> docs, const MinHashParams& params,
                         unsigned workers = 1);

}  // namespace nahr
