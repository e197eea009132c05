// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nahr {

enum class MetricName : std::uint8_t {
  pearson,
  jaccard,
  f1_macro,
  accuracy,
  rouge1,
  rouge2,
  rougeL,
  bleu,
  em,
  qa_f1,
  alue_avg,
};

std::string_view to_string(MetricName name) noexcept;

struct MetricValue {
  MetricName name = MetricName::accuracy;
  double value = 0.0;
  std::size_t support = 0;
  bool degenerate = false;  // pearson with a zero-variance input
};

/// Sample Pearson r. A zero-variance input yields 0.0 with `degenerate` set.
/// Throws ValidationError unless both lists have the same length >= 2.
MetricValue pearson(std::span<const double> preds, std::span<const double> golds);

using LabelSet = std::set<std::string>;

/// Mean per-sample |P∩G| / |P∪G|; a sample with both sets empty scores 1.
MetricValue jaccard_multilabel(std::span<const LabelSet> preds, std::span<const LabelSet> golds);

MetricValue accuracy(std::span<const std::string> preds, std::span<const std::string> golds);

enum class F1Average : std::uint8_t { macro, micro, weighted };

/// F1 over the classes present in `golds`. A gold class that is never
/// predicted contributes 0. Classes only predicted are not averaged in.
MetricValue f1_score(std::span<const std::string> preds, std::span<const std::string> golds,
                     F1Average average = F1Average::macro);

struct QaScore {
  double em = 0.0;
  double f1 = 0.0;
};

/// SQuAD-style scoring after Arabic answer normalization. `golds` must be non-empty.
QaScore qa_em_f1(std::string_view pred, std::span<const std::string> golds);

enum class RougeVariant : std::uint8_t { rouge1, rouge2, rougeL };

/// F-measure over whitespace tokens. Both empty -> 1, exactly one empty -> 0.
MetricValue rouge(std::string_view pred, std::string_view ref, RougeVariant variant);

/// Corpus BLEU-4 with brevity penalty; add-one smoothing on the 2..4-gram precisions.
MetricValue bleu(std::span<const std::string> preds, std::span<const std::string> refs);

/// Table column order.
inline constexpr std::array<std::string_view, 8> kAlueTasks = {"MQ2Q", "MDD", "SVREG", "SEC",
                                                               "FID",  "OOLD", "XNLI", "OHSD"};

/// Unweighted mean of the eight task scores; throws ValidationError listing
/// missing (or unknown) keys.
MetricValue alue_average(const std::map<std::string, double, std::less<>>& scores);

/// One decimal, halves rounded up ("79.8" for 79.75).
std::string render_one_decimal(double value);

struct AlueRow {
  std::string model;
  std::map<std::string, double, std::less<>> scores;
};

/// Text table in the column order MQ2Q .. OHSD, Avg.
std::string render_alue_table(std::span<const AlueRow> rows);

// -- few-shot protocol -----------------------------------------------------------------------

inline constexpr std::array<std::uint32_t, 6> kFewShotSizes = {8, 16, 32, 64, 128, 256};

struct LabeledExample {
  std::string id;
  std::string label;
};

struct FewShotFold {
  std::uint32_t requested_size = 0;
  std::vector<std::string> example_ids;  // sampled ids in draw order, then augmented ids
  std::vector<std::string> augmented;    // one id for each class the draw missed
  std::uint64_t seed = 0;

  bool operator==(const FewShotFold&) const = default;
};

/// Uniform sample of `size` examples without replacement, then one uniformly
/// chosen example appended for every class the sample missed. Classes are
/// those present in `dataset` plus `declared_classes`; a declared class with
/// no examples is an error, as is a size outside kFewShotSizes or above the
/// dataset size.
FewShotFold sample_fewshot(std::span<const LabeledExample> dataset, std::uint32_t size,
                           std::uint64_t seed, std::span<const std::string> declared_classes = {});

/// `folds` folds with seeds seed, seed+1, ...
std::vector<FewShotFold> sample_folds(std::span<const LabeledExample> dataset, std::uint32_t size,
                                      std::uint64_t seed, std::uint32_t folds = 5);

enum class StdKind : std::uint8_t { population, sample };

struct RunSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n_runs = 0;
};

/// Throws ValidationError for an empty list.
RunSummary summarize_runs(std::span<const double> scores, StdKind kind = StdKind::population);

/// "79.9±0.2"
std::string format_summary(const RunSummary& summary);

// -- file entry points ----------------------------------------------------------------------

/// Scores a predictions JSONL file (`id`, `prediction`, `gold` or `golds`)
/// for a task name (ALUE task, TS, QG, QA) or a metric name, returning a JSON report.
std::string evaluate_predictions_file(std::string_view task, const std::filesystem::path& jsonl);

/// Reads `{"model": ..., "scores": {...}}` objects (one object or an array)
/// and returns the rendered ALUE table plus JSON with averages.
std::pair<std::string, std::string> alue_report_from_file(const std::filesystem::path& json);

std::vector<LabeledExample> read_labeled_jsonl(const std::filesystem::path& jsonl);
std::string folds_to_json(std::span<const FewShotFold> folds);

}  // namespace nahr
