// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace nahr::testing {

/// Synthetic Arabic-like corpus with planted duplicates, noise and broken
/// records. Every document's fate is known up front.
struct FixtureSpec {
  std::uint64_t target_bytes = 4 << 20;
  std::uint64_t seed = 1;
  double exact_dup_rate = 0.04;
  double near_dup_rate = 0.04;
  double noise_rate = 0.05;
  double invalid_utf8_rate = 0.002;
  std::uint32_t min_words = 300;
  std::uint32_t max_words = 700;
  std::uint32_t lexicon_size = 20000;
};

enum class Planted : std::uint8_t { base, exact_dup, near_dup, noise, invalid };

struct FixtureTruth {
  std::filesystem::path dir;
  std::filesystem::path config;  // pipeline config pointing at the shards
  std::vector<std::filesystem::path> shards;
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;
  std::uint64_t base = 0, exact = 0, near = 0, noise = 0, invalid = 0;
  /// Fate of each ingested document (invalid records excluded), in stream order.
  std::vector<Planted> fates;
  /// For duplicates, the ordinal of the document they copy.
  std::vector<std::int64_t> origin;
  /// Exact Jaccard of each near duplicate's 5-shingle set against its origin.
  std::vector<double> planted_jaccard;
};

/// Writes three WET shards (the second gzipped) plus one JSONL shard and a
/// pipeline config into `dir`.
FixtureTruth write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec,
                           const std::filesystem::path& output_dir);

/// Lexicon of random Arabic-letter words.
std::vector<std::string> make_lexicon(std::size_t n, std::mt19937_64& rng);

/// Lines of random lexicon words.
std::string random_arabic_text(const std::vector<std::string>& lexicon, std::size_t words,
                               std::mt19937_64& rng);

}  // namespace nahr::testing
