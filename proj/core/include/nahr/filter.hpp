// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nahr/ingest.hpp"

namespace nahr {

/// Filter rules in canonical evaluation order. The first violated rule is the
/// one reported on a DROP.
enum class FilterRule : std::uint8_t {
  min_chars,
  max_chars,
  min_arabic_ratio,
  max_digit_ratio,
  max_punct_ratio,
  max_repeated_line_ratio,
  max_top_word_ratio,
};

inline constexpr std::array<FilterRule, 7> kRuleOrder = {
    FilterRule::min_chars,         FilterRule::max_chars,       FilterRule::min_arabic_ratio,
    FilterRule::max_digit_ratio,   FilterRule::max_punct_ratio, FilterRule::max_repeated_line_ratio,
    FilterRule::max_top_word_ratio};

std::string_view to_string(FilterRule rule) noexcept;
std::optional<FilterRule> parse_filter_rule(std::string_view name);

struct FilterConfig {
  std::uint64_t min_chars = 64;
  std::uint64_t max_chars = 1'000'000;
  double min_arabic_ratio = 0.60;
  double max_digit_ratio = 0.20;
  double max_punct_ratio = 0.20;
  double max_repeated_line_ratio = 0.30;
  double max_top_word_ratio = 0.10;

  /// Throws ValidationError when min_chars > max_chars or a ratio is outside [0,1].
  void validate() const;

  bool operator==(const FilterConfig&) const = default;
};

FilterConfig filter_config_from_json(std::string_view json);
FilterConfig load_filter_config(const std::filesystem::path& path);
std::string to_json(const FilterConfig& config);

enum class Verdict : std::uint8_t { keep, drop };

struct FilterDecision {
  Fingerprint128 doc_id;
  Verdict verdict = Verdict::keep;
  std::optional<FilterRule> failed_rule;
  /// Measured values for every rule evaluated, in evaluation order.
  std::vector<std::pair<FilterRule, double>> rule_values;

  std::optional<double> value(FilterRule rule) const;
};

/// Per-document measurements the rules are evaluated against.
struct TextProfile {
  std::size_t chars = 0;
  std::size_t arabic = 0;
  std::size_t digits = 0;
  std::size_t punct = 0;
  std::size_t lines = 0;
  std::size_t repeated_lines = 0;  // lines identical to an earlier line of the same document
  std::size_t words = 0;
  std::size_t top_word_count = 0;

  double ratio(std::size_t n, std::size_t of) const noexcept {
    return of == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(of);
  }
};

TextProfile profile_text(std::string_view text);

FilterDecision apply_filters(const Document& doc, const FilterConfig& config);

// -- original vs clean accounting -----------------------------------------------

struct SourceStats {
  std::optional<Source> source;  // nullopt on the total row
  std::uint64_t original_bytes = 0;
  std::uint64_t clean_bytes = 0;

  /// 100 * (1 - clean/original). Unrounded.
  double filtering_pct() const;

  bool operator==(const SourceStats&) const = default;
};

struct CorpusStats {
  std::vector<SourceStats> rows;  // ordered by Source
  SourceStats total;

  bool operator==(const CorpusStats&) const = default;
};

/// Commutative, associative accumulator; partial results from separate
/// workers merge into the same totals regardless of order.
class StatsAccumulator {
 public:
  void add_original(Source source, std::uint64_t bytes);
  void add_clean(Source source, std::uint64_t bytes);
  void add(const Document& doc, const FilterDecision& decision);
  void merge(const StatsAccumulator& other);

  /// Throws Error if a source with clean bytes has zero original bytes.
  CorpusStats finish() const;

 private:
  std::array<std::uint64_t, 5> original_{};
  std::array<std::uint64_t, 5> clean_{};
  std::array<bool, 5> seen_{};
};

CorpusStats aggregate_stats(std::span<const std::pair<Document, FilterDecision>> decisions);

/// Builds stats from explicit byte counts (report re-rendering, tests).
CorpusStats make_corpus_stats(std::span<const SourceStats> rows);

/// Nearest integer percent, halves rounded up.
long rounded_pct(double pct);

/// Decimal units the way the corpus table writes them: "8.8TB", "529GB", "16GB".
std::string format_size(std::uint64_t bytes);

std::string render_stats_table(const CorpusStats& stats);
std::string stats_to_json(const CorpusStats& stats);
CorpusStats stats_from_json(std::string_view json);

}  // namespace nahr
