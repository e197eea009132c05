// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

// Straightforward reference implementations used to cross-check the library.
// They favour obviousness over speed and share no code with it.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nahr::oracle {

std::vector<std::string> words(std::string_view text);

std::set<std::vector<std::string>> shingles(std::string_view text, std::size_t n);
double jaccard(const std::set<std::vector<std::string>>& a, const std::set<std::vector<std::string>>& b);
double shingle_jaccard(std::string_view a, std::string_view b, std::size_t n);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
double multilabel_jaccard(const std::vector<std::set<std::string>>& p, const std::vector<std::set<std::string>>& g);
double accuracy(const std::vector<std::string>& p, const std::vector<std::string>& g);
double macro_f1(const std::vector<std::string>& p, const std::vector<std::string>& g);

/// Arabic answer normalization and SQuAD scoring, maximized over golds.
std::string normalize_answer(std::string_view s);
std::pair<double, double> qa_em_f1(std::string_view pred, const std::vector<std::string>& golds);

double rouge_n(std::string_view pred, std::string_view ref, std::size_t n);
double rouge_l(std::string_view pred, std::string_view ref);
double corpus_bleu(const std::vector<std::string>& preds, const std::vector<std::string>& refs);

/// Byte-pair merge training by full recount after every merge.
struct BpeResult {
  std::vector<std::string> pieces;  // alphabet (sorted) then merged pieces, in creation order
  std::vector<std::pair<std::string, std::string>> merges;
};
BpeResult train_bpe(std::string_view corpus, std::size_t max_pieces);

/// Splits a UTF-8 string into code points.
std::vector<std::string> code_points(std::string_view s);

}  // namespace nahr::oracle
