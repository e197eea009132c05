// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "nahr/dedup.hpp"
#include "nahr/evaluation.hpp"
#include "nahr/filter.hpp"
#include "nahr/span_corruption.hpp"
#include "nahr/tokenizer.hpp"

namespace {

std::string arabic_text(std::size_t words, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += (i % 15 == 0) ? '\n' : ' ';
    for (std::size_t k = 0, len = 2 + rng() % 6; k < len; ++k) {
      const char32_t cp = 0x0627 + static_cast<char32_t>(rng() % 36);
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

void BM_Normalize(benchmark::State& state) {
  const auto text = arabic_text(2000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(nahr::make_document(text, nahr::Source::cc));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Normalize);

void BM_Filter(benchmark::State& state) {
  const auto doc = nahr::make_document(arabic_text(2000, 2), nahr::Source::cc);
  const nahr::FilterConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(nahr::apply_filters(doc, cfg));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * doc.text.size()));
}
BENCHMARK(BM_Filter);

void BM_MinHashSignature(benchmark::State& state) {
  nahr::MinHashParams params;
  params.k = static_cast<std::uint32_t>(state.range(0));
  params.bands = params.k / 8;
  const nahr::MinHasher hasher(params);
  const auto text = arabic_text(500, 3);
  for (auto _ : state) benchmark::DoNotOptimize(hasher.signature(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_MinHashSignature)->Arg(128)->Arg(256);

void BM_Encode(benchmark::State& state) {
  std::vector<std::string> corpus;
  for (std::uint64_t i = 0; i < 200; ++i) corpus.push_back(arabic_text(300, 10 + i));
  const auto trained = nahr::train_vocab(corpus, {.target_size = 4000, .num_sentinels = 100});
  const auto text = arabic_text(2000, 4);
  nahr::Encoder enc(trained.vocab, state.range(0) ? 1 << 20 : 0);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Encode)->Arg(0)->Arg(1);

void BM_Corrupt(benchmark::State& state) {
  nahr::SpecialTokens sp;
  sp.vocab_size = 32100;
  sp.num_sentinels = 100;
  std::mt19937_64 rng(5);
  nahr::TokenSequence seq(512);
  for (auto& t : seq) t = 3 + static_cast<nahr::TokenId>(rng() % 30000);
  const nahr::NoiseSpec spec;
  std::uint64_t counter = 0;
  for (auto _ : state) benchmark::DoNotOptimize(nahr::corrupt(seq, spec, sp, counter++));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_Corrupt);

void BM_RougeL(benchmark::State& state) {
  const auto a = arabic_text(static_cast<std::size_t>(state.range(0)), 6);
  const auto b = arabic_text(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(nahr::rouge(a, b, nahr::RougeVariant::rougeL));
}
BENCHMARK(BM_RougeL)->Arg(100)->Arg(1000);

void BM_Bleu(benchmark::State& state) {
  std::vector<std::string> hyps, refs;
  for (std::uint64_t i = 0; i < 100; ++i) {
    hyps.push_back(arabic_text(30, 100 + i));
    refs.push_back(arabic_text(30, 300 + i));
  }
  for (auto _ : state) benchmark::DoNotOptimize(nahr::bleu(hyps, refs));
}
BENCHMARK(BM_Bleu);

}  // namespace

BENCHMARK_MAIN();
