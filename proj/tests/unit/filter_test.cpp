// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/filter.hpp"

#include <gtest/gtest.h>

#include <random>

#include "fixture.hpp"

namespace nahr {
namespace {

// Arabic word of 5 letters, 10 bytes.
const std::string kWord = "\xD9\x85\xD8\xB1\xD8\xAD\xD8\xA8\xD8\xA7";

std::string varied_arabic(std::size_t words, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const auto lexicon = testing::make_lexicon(500, rng);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += (i % 12 == 0) ? '\n' : ' ';
    out += lexicon[rng() % lexicon.size()];
  }
  return out;
}

FilterDecision run(const std::string& text, const FilterConfig& cfg = {}) {
  return apply_filters(make_document(text, Source::cc), cfg);
}

TEST(FilterConfig, ValidatesBoundsAndRatios) {
  FilterConfig c;
  EXPECT_NO_THROW(c.validate());
  c.min_chars = 10;
  c.max_chars = 5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.max_digit_ratio = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.min_arabic_ratio = -0.1;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(FilterConfig, JsonRoundTripAndUnknownKeys) {
  FilterConfig c;
  c.min_chars = 100;
  c.max_top_word_ratio = 0.25;
  EXPECT_EQ(filter_config_from_json(to_json(c)), c);
  EXPECT_EQ(filter_config_from_json("{}"), FilterConfig{});
  EXPECT_THROW(filter_config_from_json(R"({"min_charz": 3})"), ValidationError);
  EXPECT_THROW(filter_config_from_json(R"({"min_chars": 10, "max_chars": 2})"), ValidationError);
  EXPECT_THROW(filter_config_from_json("not json"), ValidationError);
}

TEST(Filter, KeepsOrdinaryArabicText) {
  const auto d = run(varied_arabic(200));
  EXPECT_EQ(d.verdict, Verdict::keep);
  EXPECT_FALSE(d.failed_rule.has_value());
  EXPECT_EQ(d.rule_values.size(), kRuleOrder.size());
}

TEST(Filter, EachRuleCanFire) {
  EXPECT_EQ(run("\xD9\x85 short").failed_rule, FilterRule::min_chars);

  FilterConfig small;
  small.max_chars = 100;
  EXPECT_EQ(run(varied_arabic(100), small).failed_rule, FilterRule::max_chars);

  EXPECT_EQ(run(varied_arabic(20) + " " + std::string(200, 'x')).failed_rule,
            FilterRule::min_arabic_ratio);

  std::string digits = varied_arabic(60);
  for (int i = 0; i < 20; ++i) digits += " \xD9\xA1\xD9\xA2\xD9\xA3\xD9\xA4\xD9\xA5";  // Arabic-Indic digits
  EXPECT_EQ(run(digits).failed_rule, FilterRule::max_digit_ratio);

  std::string punct = varied_arabic(60);
  for (int i = 0; i < 60; ++i) punct += " \xD8\x8C\xD8\x9B\xD8\x9F";  // Arabic comma, semicolon, question mark
  EXPECT_EQ(run(punct).failed_rule, FilterRule::max_punct_ratio);

  std::string lines = varied_arabic(24);
  for (int i = 0; i < 8; ++i) lines += "\nsame \xD9\x84\xD9\x84 line " + kWord + " " + kWord;
  FilterConfig loose;
  loose.min_arabic_ratio = 0.3;
  EXPECT_EQ(run(lines, loose).failed_rule, FilterRule::max_repeated_line_ratio);

  std::string top = varied_arabic(100);
  for (int i = 0; i < 40; ++i) top += " " + kWord;
  EXPECT_EQ(run(top).failed_rule, FilterRule::max_top_word_ratio);
}

TEST(Filter, FirstFailingRuleIsReported) {
  // Fails min_arabic_ratio and max_digit_ratio; the earlier rule wins and
  // later rules are not evaluated.
  const auto d = run(std::string(100, '7'));
  EXPECT_EQ(d.failed_rule, FilterRule::min_arabic_ratio);
  EXPECT_EQ(d.rule_values.size(), 3u);
  EXPECT_FALSE(d.value(FilterRule::max_digit_ratio).has_value());
  EXPECT_DOUBLE_EQ(*d.value(FilterRule::min_chars), 100.0);
}

TEST(Filter, ThresholdsAreInclusive) {
  const auto doc = make_document(varied_arabic(50), Source::cc);
  FilterConfig c;
  c.min_chars = doc.char_count;
  c.max_chars = doc.char_count;
  c.min_arabic_ratio = doc.arabic_ratio;
  EXPECT_EQ(apply_filters(doc, c).verdict, Verdict::keep);
  c.min_chars = doc.char_count + 1;
  EXPECT_EQ(apply_filters(doc, c).failed_rule, FilterRule::min_chars);
}

TEST(Profile, CountsClasses) {
  const auto p = profile_text("ab 12 \xD9\xA3\xD9\xA4 !?\n\xD8\x8C x\nab 12 \xD9\xA3\xD9\xA4 !?");
  EXPECT_EQ(p.chars, 27u);
  EXPECT_EQ(p.digits, 8u);
  EXPECT_EQ(p.punct, 5u);
  EXPECT_EQ(p.arabic, 5u);
  EXPECT_EQ(p.lines, 3u);
  EXPECT_EQ(p.repeated_lines, 1u);
  EXPECT_EQ(p.words, 10u);
  EXPECT_EQ(p.top_word_count, 2u);
}

TEST(Stats, PercentagesAndRounding) {
  const std::vector<SourceStats> rows = {{Source::cc, 1000, 50}, {Source::news, 21, 14}};
  const auto s = make_corpus_stats(rows);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(s.rows[0].filtering_pct(), 95.0);
  EXPECT_NEAR(s.rows[1].filtering_pct(), 100.0 / 3.0, 1e-12);
  EXPECT_EQ(s.total.original_bytes, 1021u);
  EXPECT_EQ(s.total.clean_bytes, 64u);
  EXPECT_EQ(rounded_pct(33.5), 34);
  EXPECT_EQ(rounded_pct(33.49), 33);
  EXPECT_EQ(rounded_pct(0.0), 0);
}

TEST(Stats, NothingFilteredIsZeroPercent) {
  const std::vector<SourceStats> rows = {{Source::dialect, 500, 500}};
  const auto s = make_corpus_stats(rows);
  EXPECT_EQ(rounded_pct(s.total.filtering_pct()), 0);
  EXPECT_NE(render_stats_table(s).find("   0%"), std::string::npos);
}

TEST(Stats, RejectsInconsistentRows) {
  const std::vector<SourceStats> zero = {{Source::cc, 0, 0}};
  EXPECT_THROW(make_corpus_stats(zero), Error);
  const std::vector<SourceStats> more = {{Source::cc, 10, 11}};
  EXPECT_THROW(make_corpus_stats(more), Error);
}

TEST(Stats, AccumulatorMergeIsOrderIndependent) {
  std::vector<std::pair<Document, FilterDecision>> decisions;
  for (int i = 0; i < 40; ++i) {
    auto doc = make_document(varied_arabic(10 + static_cast<std::size_t>(i), static_cast<std::uint64_t>(i)),
                             i % 3 == 0 ? Source::news : Source::cc);
    auto d = apply_filters(doc, {});
    decisions.emplace_back(std::move(doc), std::move(d));
  }
  const auto whole = aggregate_stats(decisions);
  StatsAccumulator a, b;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    (i % 2 ? a : b).add(decisions[i].first, decisions[i].second);
  }
  StatsAccumulator ab = a, ba = b;
  ab.merge(b);
  ba.merge(a);
  EXPECT_EQ(ab.finish(), whole);
  EXPECT_EQ(ba.finish(), whole);
}

TEST(Stats, FormatSizeMatchesTableStyle) {
  EXPECT_EQ(format_size(8'800'000'000'000ULL), "8.8TB");
  EXPECT_EQ(format_size(8'700'000'000'000ULL), "8.7TB");
  EXPECT_EQ(format_size(529'000'000'000ULL), "529GB");
  EXPECT_EQ(format_size(16'000'000'000ULL), "16GB");
  EXPECT_EQ(format_size(999), "999B");
}

TEST(Stats, JsonRoundTrip) {
  const std::vector<SourceStats> rows = {{Source::cc, 8'700'000'000'000ULL, 439'000'000'000ULL},
                                         {Source::elkheir, 16'000'000'000ULL, 13'000'000'000ULL}};
  const auto s = make_corpus_stats(rows);
  EXPECT_EQ(stats_from_json(stats_to_json(s)), s);
}

}  // namespace
}  // namespace nahr
