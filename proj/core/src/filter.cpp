// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/filter.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json_io.hpp"
#include "nahr/unicode.hpp"

namespace nahr {
namespace {

void check_ratio(double v, std::string_view name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(fmt::format("filter.{} must be in [0,1], got {}", name, v));
  }
}

std::size_t source_index(Source s) { return static_cast<std::size_t>(s); }

}  // namespace

std::string_view to_string(FilterRule rule) noexcept {
  switch (rule) {
    case FilterRule::min_chars: return "min_chars";
    case FilterRule::max_chars: return "max_chars";
    case FilterRule::min_arabic_ratio: return "min_arabic_ratio";
    case FilterRule::max_digit_ratio: return "max_digit_ratio";
    case FilterRule::max_punct_ratio: return "max_punct_ratio";
    case FilterRule::max_repeated_line_ratio: return "max_repeated_line_ratio";
    case FilterRule::max_top_word_ratio: return "max_top_word_ratio";
  }
  return "unknown";
}

std::optional<FilterRule> parse_filter_rule(std::string_view name) {
  for (FilterRule r : kRuleOrder) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

void FilterConfig::validate() const {
  if (min_chars > max_chars) {
    throw ValidationError(
        fmt::format("filter.min_chars ({}) exceeds filter.max_chars ({})", min_chars, max_chars));
  }
  check_ratio(min_arabic_ratio, "min_arabic_ratio");
  check_ratio(max_digit_ratio, "max_digit_ratio");
  check_ratio(max_punct_ratio, "max_punct_ratio");
  check_ratio(max_repeated_line_ratio, "max_repeated_line_ratio");
  check_ratio(max_top_word_ratio, "max_top_word_ratio");
}

FilterConfig filter_config_from_json(std::string_view json) {
  const auto j = json_io::parse(json, "filter config");
  auto cfg = j.get<FilterConfig>();
  cfg.validate();
  return cfg;
}

FilterConfig load_filter_config(const std::filesystem::path& path) {
  return filter_config_from_json(json_io::read_file(path));
}

std::string to_json(const FilterConfig& config) { return nlohmann::json(config).dump(2); }

std::optional<double> FilterDecision::value(FilterRule rule) const {
  for (const auto& [r, v] : rule_values) {
    if (r == rule) return v;
  }
  return std::nullopt;
}

TextProfile profile_text(std::string_view text) {
  TextProfile p;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto b = static_cast<unsigned char>(text[pos]);
    char32_t cp;
    if (b < 0x80) {
      cp = b;
      ++pos;
      if (cp >= '0' && cp <= '9') {
        ++p.digits;
      } else if (cp > ' ' && cp < 0x7F && !std::isalnum(static_cast<int>(cp))) {
        p.punct += unicode::is_punctuation(cp);
      }
    } else {
      cp = unicode::next_code_point(text, pos);
      if (unicode::is_arabic(cp)) {
        ++p.arabic;
        if (cp >= 0x0621 && cp <= 0x064A) {
          // letters: nothing else to classify
        } else if (unicode::is_decimal_digit(cp)) {
          ++p.digits;
        } else if (unicode::is_punctuation(cp)) {
          ++p.punct;
        }
      } else if (unicode::is_decimal_digit(cp)) {
        ++p.digits;
      } else if (unicode::is_punctuation(cp)) {
        ++p.punct;
      }
    }
    ++p.chars;
  }

  std::unordered_set<std::string_view> seen_lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    if (!line.empty()) {
      ++p.lines;
      if (!seen_lines.insert(line).second) ++p.repeated_lines;
    }
    start = end + 1;
  }

  std::unordered_map<std::string_view, std::size_t> counts;
  for (auto w : unicode::split_words(text)) {
    ++p.words;
    const std::size_t c = ++counts[w];
    p.top_word_count = std::max(p.top_word_count, c);
  }
  return p;
}

FilterDecision apply_filters(const Document& doc, const FilterConfig& config) {
  FilterDecision d;
  d.doc_id = doc.doc_id;
  const TextProfile p = profile_text(doc.text);

  for (FilterRule rule : kRuleOrder) {
    double value = 0.0;
    bool pass = true;
    switch (rule) {
      case FilterRule::min_chars:
        value = static_cast<double>(doc.char_count);
        pass = doc.char_count >= config.min_chars;
        break;
      case FilterRule::max_chars:
        value = static_cast<double>(doc.char_count);
        pass = doc.char_count <= config.max_chars;
        break;
      case FilterRule::min_arabic_ratio:
        value = doc.arabic_ratio;
        pass = value >= config.min_arabic_ratio;
        break;
      case FilterRule::max_digit_ratio:
        value = p.ratio(p.digits, p.chars);
        pass = value <= config.max_digit_ratio;
        break;
      case FilterRule::max_punct_ratio:
        value = p.ratio(p.punct, p.chars);
        pass = value <= config.max_punct_ratio;
        break;
      case FilterRule::max_repeated_line_ratio:
        value = p.ratio(p.repeated_lines, p.lines);
        pass = value <= config.max_repeated_line_ratio;
        break;
      case FilterRule::max_top_word_ratio:
        value = p.ratio(p.top_word_count, p.words);
        pass = value <= config.max_top_word_ratio;
        break;
    }
    d.rule_values.emplace_back(rule, value);
    if (!pass) {
      d.verdict = Verdict::drop;
      d.failed_rule = rule;
      return d;
    }
  }
  return d;
}

// -- stats --------------------------------------------------------------------------

double SourceStats::filtering_pct() const {
  if (original_bytes == 0) return 0.0;
  return 100.0 * (1.0 - static_cast<double>(clean_bytes) / static_cast<double>(original_bytes));
}

void StatsAccumulator::add_original(Source source, std::uint64_t bytes) {
  original_[source_index(source)] += bytes;
  seen_[source_index(source)] = true;
}

void StatsAccumulator::add_clean(Source source, std::uint64_t bytes) {
  clean_[source_index(source)] += bytes;
  seen_[source_index(source)] = true;
}

void StatsAccumulator::add(const Document& doc, const FilterDecision& decision) {
  add_original(doc.source, doc.byte_size());
  if (decision.verdict == Verdict::keep) add_clean(doc.source, doc.byte_size());
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  for (std::size_t i = 0; i < original_.size(); ++i) {
    original_[i] += other.original_[i];
    clean_[i] += other.clean_[i];
    seen_[i] = seen_[i] || other.seen_[i];
  }
}

CorpusStats StatsAccumulator::finish() const {
  std::vector<SourceStats> rows;
  for (Source s : kAllSources) {
    const auto i = source_index(s);
    if (!seen_[i]) continue;
    rows.push_back(SourceStats{s, original_[i], clean_[i]});
  }
  return make_corpus_stats(rows);
}

CorpusStats make_corpus_stats(std::span<const SourceStats> rows) {
  CorpusStats stats;
  for (const auto& r : rows) {
    if (r.original_bytes == 0) {
      throw Error(fmt::format("source {} has zero original bytes",
                              r.source ? to_string(*r.source) : std::string_view("?")));
    }
    if (r.clean_bytes > r.original_bytes) {
      throw Error(fmt::format("source {} has more clean than original bytes",
                              r.source ? to_string(*r.source) : std::string_view("?")));
    }
    stats.total.original_bytes += r.original_bytes;
    stats.total.clean_bytes += r.clean_bytes;
    stats.rows.push_back(r);
  }
  std::sort(stats.rows.begin(), stats.rows.end(),
            [](const SourceStats& a, const SourceStats& b) { return a.source < b.source; });
  return stats;
}

CorpusStats aggregate_stats(std::span<const std::pair<Document, FilterDecision>> decisions) {
  StatsAccumulator acc;
  for (const auto& [doc, decision] : decisions) acc.add(doc, decision);
  return acc.finish();
}

long rounded_pct(double pct) { return static_cast<long>(std::floor(pct + 0.5)); }

std::string format_size(std::uint64_t bytes) {
  static constexpr std::array<std::string_view, 5> kUnits = {"B", "KB", "MB", "GB", "TB"};
  double v = static_cast<double>(bytes);
  std::size_t unit = 0;
  while (unit + 1 < kUnits.size() && v >= 1000.0) {
    v /= 1000.0;
    ++unit;
  }
  std::string num;
  if (v < 10.0 && unit > 0) {
    const double r = std::round(v * 10.0) / 10.0;
    num = (r == std::floor(r)) ? fmt::format("{:.0f}", r) : fmt::format("{:.1f}", r);
  } else {
    num = fmt::format("{:.0f}", std::round(v));
  }
  return num + std::string(kUnits[unit]);
}

std::string render_stats_table(const CorpusStats& stats) {
  std::ostringstream out;
  const auto row = [&](std::string_view name, const SourceStats& s) {
    out << fmt::format("{:<10} | {:>8} | {:>8} | {:>4}%\n", name, format_size(s.original_bytes),
                       format_size(s.clean_bytes), rounded_pct(s.filtering_pct()));
  };
  out << fmt::format("{:<10} | {:>8} | {:>8} | {}\n", "Source", "Original", "Clean", "Filtering %");
  out << std::string(46, '-') << '\n';
  for (const auto& r : stats.rows) row(to_string(*r.source), r);
  out << std::string(46, '-') << '\n';
  row("Total", stats.total);
  return out.str();
}

std::string stats_to_json(const CorpusStats& stats) { return nlohmann::json(stats).dump(2); }

CorpusStats stats_from_json(std::string_view json) {
  return json_io::parse(json, "corpus stats").get<CorpusStats>();
}

}  // namespace nahr
