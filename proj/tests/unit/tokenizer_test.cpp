// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/tokenizer.hpp"
#include "nahr/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fixture.hpp"
#include "oracles.hpp"

namespace nahr {
namespace {

std::vector<std::string> corpus(std::size_t docs, std::size_t words, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto lex = testing::make_lexicon(400, rng);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < docs; ++i) out.push_back(testing::random_arabic_text(lex, words, rng));
  return out;
}

std::string joined(const std::vector<std::string>& texts) {
  std::string out;
  for (const auto& t : texts) out += t + "\n";
  return out;
}

TEST(Vocab, IdLayout) {
  SubwordVocab v({"a", "b", "ab"}, 4, 10);
  EXPECT_EQ(v.size(), 10u);
  EXPECT_EQ(v.piece_id("a"), 3u);
  EXPECT_EQ(v.piece_id("ab"), 5u);
  EXPECT_EQ(v.piece_rank("ab"), 2u);
  EXPECT_EQ(v.sentinel_id(0), 9u);
  EXPECT_EQ(v.sentinel_id(3), 6u);
  EXPECT_TRUE(v.is_sentinel(6));
  EXPECT_FALSE(v.is_sentinel(5));
  EXPECT_EQ(v.id_to_string(9), "<extra_id_0>");
  EXPECT_EQ(v.id_to_string(0), "<pad>");
  EXPECT_EQ(v.id_to_string(1), "</s>");
  EXPECT_EQ(v.id_to_string(2), "<unk>");
  EXPECT_THROW(v.id_to_string(10), Error);
  const auto sp = v.special_tokens();
  EXPECT_EQ(sp.sentinel_index(7), 2u);
}

TEST(Vocab, RejectsBadInventories) {
  EXPECT_THROW(SubwordVocab({"a", "a"}, 1, 10), Error);
  EXPECT_THROW(SubwordVocab({"a", ""}, 1, 10), Error);
  EXPECT_THROW(SubwordVocab({"a", "b", "c"}, 5, 10), Error);
}

TEST(Vocab, SerializeRoundTrip) {
  const auto trained = train_vocab(corpus(50, 80, 1), {.target_size = 400, .num_sentinels = 20});
  const auto& v = trained.vocab;
  const auto parsed = SubwordVocab::parse(v.serialize());
  EXPECT_EQ(parsed, v);
  EXPECT_EQ(parsed.fingerprint(), v.fingerprint());
  const auto path = std::filesystem::temp_directory_path() / "nahr_vocab_test.txt";
  v.save(path);
  EXPECT_EQ(SubwordVocab::load(path), v);
  std::filesystem::remove(path);
  EXPECT_THROW(SubwordVocab::parse("garbage"), Error);
}

TEST(Trainer, ReachesTargetExactly) {
  for (std::uint32_t target : {300u, 500u, 1000u}) {
    const auto t = train_vocab(corpus(200, 100, 2), {.target_size = target, .num_sentinels = 100});
    EXPECT_EQ(t.vocab.size(), target);
    EXPECT_EQ(t.vocab.num_sentinels(), 100u);
  }
}

TEST(Trainer, TooSmallTargetOrEmptyCorpus) {
  EXPECT_THROW(train_vocab(corpus(10, 50, 3), {.target_size = 50, .num_sentinels = 40}),
               ValidationError);
  EXPECT_THROW(train_vocab(std::vector<std::string>{}, {}), ValidationError);
  EXPECT_THROW(train_vocab(std::vector<std::string>{"   "}, {}), ValidationError);
}

TEST(Trainer, StopsWhenNoPairRepeats) {
  const std::vector<std::string> texts = {"ab cd"};
  const auto t = train_vocab(texts, {.target_size = 100, .num_sentinels = 2});
  EXPECT_TRUE(t.merges.empty());
  EXPECT_LT(t.vocab.size(), 100u);
}

TEST(Trainer, MatchesRecountOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto texts = corpus(3, 20 + static_cast<std::size_t>(trial), 100 + static_cast<std::uint64_t>(trial));
    const auto text = joined(texts);
    const std::uint32_t sentinels = 5;
    const std::uint32_t target = 3 + sentinels + 60 + static_cast<std::uint32_t>(rng() % 60);
    const auto mine = train_vocab(texts, {.target_size = target, .num_sentinels = sentinels});
    const auto ref = oracle::train_bpe(text, target - 3 - sentinels);
    EXPECT_EQ(mine.vocab.pieces(), ref.pieces) << "trial " << trial;
    EXPECT_EQ(mine.merges, ref.merges) << "trial " << trial;
  }
}

TEST(Trainer, TieBreaksOnMergedStringThenLeftLength) {
  // Every adjacent pair occurs twice; "ab" is the smallest merged string.
  const std::vector<std::string> texts = {"xy ab xy ab"};
  const auto t = train_vocab(texts, {.target_size = 3 + 1 + 6 + 1, .num_sentinels = 1});
  ASSERT_FALSE(t.merges.empty());
  EXPECT_EQ(t.merges[0].first + t.merges[0].second, "ab");
  EXPECT_EQ(oracle::train_bpe("xy ab xy ab", 7).merges, t.merges);
}

TEST(Encoder, RoundTripsWhitespaceNormalizedText) {
  const auto texts = corpus(100, 120, 5);
  const auto t = train_vocab(texts, {.target_size = 800, .num_sentinels = 100});
  Encoder enc(t.vocab);
  std::mt19937_64 rng(6);
  const auto lex = testing::make_lexicon(300, rng);
  for (int i = 0; i < 200; ++i) {
    const auto s = testing::random_arabic_text(lex, 1 + rng() % 40, rng);
    const auto ids = enc.encode(s);
    std::string norm;
    for (const auto w : oracle::words(s)) norm += (norm.empty() ? "" : " ") + w;
    EXPECT_EQ(decode(t.vocab, ids), norm);
    EXPECT_EQ(encode(t.vocab, s), ids);
  }
}

TEST(Encoder, UnknownCharactersAndSpecials) {
  const auto t = train_vocab(corpus(20, 50, 7), {.target_size = 300, .num_sentinels = 10});
  const auto ids = encode(t.vocab, "\xE4\xB8\xAD");  // CJK ideograph is not in the alphabet
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[1], SubwordVocab::kUnk);
  const std::vector<TokenId> with_specials = {SubwordVocab::kEos, t.vocab.sentinel_id(0)};
  EXPECT_EQ(decode(t.vocab, with_specials), "<extra_id_0>");
  const std::vector<TokenId> bad = {t.vocab.size()};
  EXPECT_THROW(decode(t.vocab, bad), Error);
}

TEST(Encoder, MergesApplyByRank) {
  SubwordVocab v({"\xE2\x96\x81", "a", "b", "c", "bc", "ab", "\xE2\x96\x81" "a"}, 1, 20);
  const auto ids = encode(v, "abc");
  // "bc" outranks "ab", so the result is ▁a | bc.
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(v.id_to_string(ids[0]), "\xE2\x96\x81" "a");
  EXPECT_EQ(v.id_to_string(ids[1]), "bc");
}

TEST(SplitCodePoints, Arabic) {
  EXPECT_EQ(split_code_points("\xE2\x96\x81\xD9\x85\xD8\xB1"),
            (std::vector<std::string>{"\xE2\x96\x81", "\xD9\x85", "\xD8\xB1"}));
}

}  // namespace
}  // namespace nahr
