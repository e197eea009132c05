// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/dedup.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fixture.hpp"
#include "oracles.hpp"

namespace nahr {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> lexicon() {
  static const auto lex = [] {
    std::mt19937_64 rng(11);
    return testing::make_lexicon(5000, rng);
  }();
  return lex;
}

std::string text_of(std::size_t words, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return testing::random_arabic_text(lexicon(), words, rng);
}

Document doc(const std::string& text, Source s = Source::cc) { return make_document(text, s); }

// Replaces the last `m` words, which lowers shingle overlap in a controlled way.
std::string perturb_tail(const std::string& text, std::size_t m, std::uint64_t seed) {
  auto w = oracle::words(text);
  std::mt19937_64 rng(seed);
  const auto& lex = lexicon();
  for (std::size_t i = w.size() - std::min(m, w.size()); i < w.size(); ++i) {
    w[i] = lex[rng() % lex.size()] + "\xD9\x80";  // tatweel keeps it out of the base vocabulary
  }
  std::string out;
  for (const auto& x : w) {
    if (!out.empty()) out += ' ';
    out += x;
  }
  return out;
}

TEST(MinHashParams, Validation) {
  MinHashParams p;
  EXPECT_NO_THROW(p.validate());
  p.bands = 30;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.k = 8;
  p.bands = 8;
  p.rows = 1;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.jaccard_threshold = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.shingle_n = 0;
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Shingles, CountMatchesOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = text_of(30 + seed * 7, seed);
    EXPECT_EQ(shingle_hashes(t, 5).size(), oracle::shingles(t, 5).size());
  }
  EXPECT_EQ(shingle_hashes("a b c d e a b c d e", 5).size(), 5u);
}

TEST(MinHash, TooShortThrows) {
  MinHasher h(MinHashParams{});
  EXPECT_THROW(h.signature("one two three four"), TooShortToShingle);
  EXPECT_NO_THROW(h.signature("one two three four five"));
}

TEST(MinHash, DeterministicPerSeedAndLayoutInsensitive) {
  MinHashParams p;
  const auto t = text_of(200, 3);
  MinHasher a(p), b(p);
  EXPECT_EQ(a.signature(t), b.signature(t));
  EXPECT_EQ(a.signature(t).k(), 256u);
  p.seed = 99;
  EXPECT_NE(MinHasher(p).signature(t), a.signature(t));
  std::string spaced = t;
  for (auto& c : spaced) {
    if (c == ' ') c = '\n';
  }
  EXPECT_EQ(a.signature(spaced), a.signature(t));
}

TEST(MinHash, EstimateTracksTrueJaccard) {
  MinHashParams p;
  MinHasher h(p);
  double abs_err = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto a = text_of(400, 1000 + seed);
    const auto b = perturb_tail(a, seed * 6, seed);
    const double truth = oracle::shingle_jaccard(a, b, 5);
    abs_err += std::abs(estimate_jaccard(h.signature(a), h.signature(b)) - truth);
    ++n;
  }
  EXPECT_LT(abs_err / n, 0.04);
}

TEST(Dedup, ExactDuplicatesAfterNormalization) {
  const auto t = text_of(100, 1);
  std::string variant = "  " + t + "\n\n";
  for (auto& c : variant) {
    if (c == ' ') c = '\t';
  }
  Deduplicator d(MinHashParams{});
  auto a = doc(t), b = doc(variant, Source::news);
  EXPECT_EQ(d.offer(a).outcome, DedupOutcome::kept);
  const auto r = d.offer(b);
  EXPECT_EQ(r.outcome, DedupOutcome::exact_duplicate);
  EXPECT_EQ(r.witness, a.doc_id);
  EXPECT_EQ(d.report().exact_dropped, 1u);
}

TEST(Dedup, NearDuplicateWinsFirstOccurrence) {
  const auto t = text_of(400, 2);
  const auto near = perturb_tail(t, 3, 5);
  ASSERT_GT(oracle::shingle_jaccard(t, near, 5), 0.9);
  Deduplicator d(MinHashParams{});
  auto a = doc(near), b = doc(t), c = doc(text_of(400, 77));
  EXPECT_EQ(d.offer(a).outcome, DedupOutcome::kept);
  const auto r = d.offer(b);
  EXPECT_EQ(r.outcome, DedupOutcome::near_duplicate);
  EXPECT_EQ(r.witness, a.doc_id);
  EXPECT_GE(r.similarity, 0.8);
  EXPECT_EQ(d.offer(c).outcome, DedupOutcome::kept);
  EXPECT_EQ(d.report(), (DedupReport{0, 1, 2, 0}));
}

TEST(Dedup, ExactVerifyUsesTrueJaccard) {
  MinHashParams p;
  p.exact_verify = true;
  const auto t = text_of(400, 4);
  const auto near = perturb_tail(t, 2, 9);
  Deduplicator d(p);
  auto a = doc(t), b = doc(near);
  d.offer(a);
  const auto r = d.offer(b);
  ASSERT_EQ(r.outcome, DedupOutcome::near_duplicate);
  EXPECT_DOUBLE_EQ(r.similarity, oracle::shingle_jaccard(t, near, 5));
}

TEST(Dedup, ShortDocumentsOnlyExactChecked) {
  Deduplicator d(MinHashParams{});
  auto a = doc("\xD9\x85\xD8\xB1 \xD8\xAD\xD8\xA8"), b = doc("\xD9\x85\xD8\xB1 \xD8\xAD\xD8\xA8");
  const auto ra = d.offer(a);
  EXPECT_EQ(ra.outcome, DedupOutcome::kept);
  EXPECT_FALSE(ra.shingled);
  EXPECT_EQ(d.offer(b).outcome, DedupOutcome::exact_duplicate);
  EXPECT_EQ(d.report().too_short, 1u);
}

TEST(Dedup, ParagraphModeStripsSeenLines) {
  MinHashParams p;
  p.granularity = DedupGranularity::paragraph;
  const auto l1 = text_of(40, 21), l2 = text_of(40, 22), l3 = text_of(40, 23);
  Deduplicator d(p);
  auto a = doc(l1 + "\n" + l2), b = doc(l2 + "\n" + l3), c = doc(l1);
  EXPECT_EQ(d.offer(a).outcome, DedupOutcome::kept);
  EXPECT_EQ(d.offer(b).outcome, DedupOutcome::kept);
  EXPECT_EQ(b.text, doc(l3).text);
  EXPECT_EQ(d.offer(c).outcome, DedupOutcome::exact_duplicate);
}

TEST(Dedup, StreamIsWorkerCountInvariant) {
  std::vector<Document> docs;
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto base = text_of(150, i % 120);
    docs.push_back(doc(i % 7 == 0 ? perturb_tail(base, 2, i) : base));
  }
  const auto serial = dedup_stream(docs, MinHashParams{}, 1);
  const auto parallel = dedup_stream(docs, MinHashParams{}, 4);
  EXPECT_EQ(serial.report, parallel.report);
  ASSERT_EQ(serial.kept.size(), parallel.kept.size());
  for (std::size_t i = 0; i < serial.kept.size(); ++i) {
    EXPECT_EQ(serial.kept[i].doc_id, parallel.kept[i].doc_id);
  }
  EXPECT_EQ(serial.report.total(), docs.size());
  EXPECT_EQ(serial.decisions.size(), docs.size());
  EXPECT_LE(serial.report.kept, 120u);
}

TEST(DedupIndex, SaveLoadRoundTrip) {
  const auto dir = fs::temp_directory_path() / "nahr_dedup_index_test";
  fs::remove_all(dir);
  Deduplicator d(MinHashParams{});
  std::vector<Document> docs;
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto x = doc(text_of(80, 500 + i));
    d.offer(x);
    docs.push_back(x);
  }
  d.index().save(dir);
  const auto loaded = DedupIndex::load(dir);
  EXPECT_EQ(loaded.exact_size(), d.index().exact_size());
  EXPECT_EQ(loaded.slots(), d.index().slots());
  EXPECT_EQ(loaded.params(), d.index().params());
  for (const auto& x : docs) {
    EXPECT_TRUE(loaded.contains_exact(exact_fingerprint(x)));
    const auto sig = d.hasher().signature(x);
    EXPECT_EQ(loaded.candidates(sig), d.index().candidates(sig));
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace nahr
