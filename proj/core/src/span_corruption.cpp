// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/span_corruption.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include "binary_io.hpp"
#include "json_io.hpp"
#include "nahr/error.hpp"
#include "rng.hpp"

namespace nahr {
namespace {

constexpr std::uint32_t kExampleFileVersion = 1;

using SpanRng = detail::SeededRng;

}  // namespace

void NoiseSpec::validate() const {
  if (!(noise_density > 0.0 && noise_density < 1.0)) {
    throw ValidationError(fmt::format("noise_density must be in (0,1), got {}", noise_density));
  }
  if (!(mean_span_length > 0.0)) {
    throw ValidationError(fmt::format("mean_span_length must be positive, got {}", mean_span_length));
  }
}

CorruptionCounts corruption_counts(std::size_t length, const NoiseSpec& spec) {
  if (length < 2) throw ValidationError("sequence too short");
  const auto n = static_cast<long long>(length);
  long long c = std::llround(static_cast<double>(length) * spec.noise_density);
  c = std::clamp(c, 1LL, n - 1);
  long long s = std::max(1LL, std::llround(static_cast<double>(c) / spec.mean_span_length));
  s = std::min({s, c, n - c + 1});
  return CorruptionCounts{static_cast<std::size_t>(c), static_cast<std::size_t>(s)};
}

SpanCorruptionExample corrupt(std::span<const TokenId> tokens, const NoiseSpec& spec,
                              const SpecialTokens& special, std::uint64_t counter) {
  const std::size_t n = tokens.size();
  if (n < 2) throw ValidationError("sequence too short");
  const auto [corrupted, spans] = corruption_counts(n, spec);
  if (spans > special.num_sentinels) {
    throw Error(fmt::format("{} spans exceed the sentinel budget of {}", spans, special.num_sentinels));
  }
  SpanRng rng(spec.seed, counter);

  // Span lengths as even as possible, in random order.
  std::vector<std::size_t> lengths(spans, corrupted / spans);
  for (std::size_t i = 0; i < corrupted % spans; ++i) ++lengths[i];
  for (std::size_t i = spans; i > 1; --i) std::swap(lengths[i - 1], lengths[rng.below(i)]);

  // Gaps between spans: interior gaps hold at least one token. The remaining
  // `free_tokens` are spread over the spans+1 gaps uniformly over all
  // compositions (stars and bars, bars drawn by selection sampling).
  const std::size_t kept = n - corrupted;
  const std::size_t free_tokens = kept - (spans - 1);
  const std::size_t slots = free_tokens + spans;
  std::vector<std::size_t> gaps(spans + 1, 0);
  {
    std::size_t need = spans, prev_bar = 0, gap_index = 0;
    bool first = true;
    for (std::size_t p = 0; p < slots && need > 0; ++p) {
      if (rng.below(slots - p) < need) {
        gaps[gap_index++] = first ? p : p - prev_bar - 1;
        prev_bar = p;
        first = false;
        --need;
      }
    }
    gaps[spans] = slots - 1 - prev_bar;
    for (std::size_t j = 1; j < spans; ++j) ++gaps[j];
  }

  SpanCorruptionExample ex;
  ex.input_ids.reserve(kept + spans);
  ex.target_ids.reserve(corrupted + spans + 1);
  std::size_t pos = 0;
  for (std::size_t j = 0; j < spans; ++j) {
    ex.input_ids.insert(ex.input_ids.end(), tokens.begin() + pos, tokens.begin() + pos + gaps[j]);
    pos += gaps[j];
    const TokenId sentinel = special.sentinel(static_cast<std::uint32_t>(j));
    ex.input_ids.push_back(sentinel);
    ex.target_ids.push_back(sentinel);
    ex.target_ids.insert(ex.target_ids.end(), tokens.begin() + pos, tokens.begin() + pos + lengths[j]);
    pos += lengths[j];
  }
  ex.input_ids.insert(ex.input_ids.end(), tokens.begin() + pos, tokens.end());
  ex.target_ids.push_back(special.eos);
  return ex;
}

bool has_valid_sentinel_structure(std::span<const TokenId> input, std::span<const TokenId> target,
                                  const SpecialTokens& special) {
  std::uint32_t next = 0;
  bool last_was_sentinel = false;
  for (const TokenId id : input) {
    if (id == special.eos || id == special.pad || id >= special.vocab_size) return false;
    if (special.is_sentinel(id)) {
      if (last_was_sentinel || special.sentinel_index(id) != next) return false;
      ++next;
      last_was_sentinel = true;
    } else {
      last_was_sentinel = false;
    }
  }
  if (next == 0 || target.empty() || target.back() != special.eos) return false;
  std::uint32_t seen = 0;
  std::size_t span_len = 0;
  for (std::size_t i = 0; i + 1 < target.size(); ++i) {
    const TokenId id = target[i];
    if (id == special.eos || id == special.pad || id >= special.vocab_size) return false;
    if (special.is_sentinel(id)) {
      if (special.sentinel_index(id) != seen) return false;
      if (seen > 0 && span_len == 0) return false;
      ++seen;
      span_len = 0;
    } else {
      if (seen == 0) return false;
      ++span_len;
    }
  }
  return seen == next && span_len > 0;
}

TokenSequence splice(const SpanCorruptionExample& example, const SpecialTokens& special) {
  if (!has_valid_sentinel_structure(example.input_ids, example.target_ids, special)) {
    throw Error("example has malformed sentinel structure");
  }
  // Span boundaries in the target, by sentinel index.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i + 1 < example.target_ids.size(); ++i) {
    if (special.is_sentinel(example.target_ids[i])) {
      if (!spans.empty()) spans.back().second = i;
      spans.emplace_back(i + 1, 0);
    }
  }
  spans.back().second = example.target_ids.size() - 1;

  TokenSequence out;
  out.reserve(example.input_ids.size() + example.target_ids.size());
  for (const TokenId id : example.input_ids) {
    if (special.is_sentinel(id)) {
      const auto [b, e] = spans[special.sentinel_index(id)];
      out.insert(out.end(), example.target_ids.begin() + static_cast<std::ptrdiff_t>(b),
                 example.target_ids.begin() + static_cast<std::ptrdiff_t>(e));
    } else {
      out.push_back(id);
    }
  }
  return out;
}

std::vector<std::span<const TokenId>> chunk_for_packing(std::span<const TokenId> tokens,
                                                        std::size_t seq_len) {
  if (seq_len < kMinSeqLen) {
    throw ValidationError(fmt::format("seq_len must be at least {}, got {}", kMinSeqLen, seq_len));
  }
  std::vector<std::span<const TokenId>> out;
  for (std::size_t pos = 0; pos < tokens.size(); pos += seq_len) {
    const auto piece = tokens.subspan(pos, std::min(seq_len, tokens.size() - pos));
    if (piece.size() >= 2) out.push_back(piece);
  }
  return out;
}

std::size_t max_target_length(std::size_t seq_len, const NoiseSpec& spec) {
  std::size_t best = 0;
  for (std::size_t n = 2; n <= seq_len; ++n) {
    const auto c = corruption_counts(n, spec);
    best = std::max(best, c.corrupted + c.spans + 1);
  }
  return best;
}

std::vector<PackedExample> pack_examples(std::span<const SpanCorruptionExample> examples,
                                         std::size_t seq_len, std::size_t target_len, TokenId pad) {
  if (seq_len < kMinSeqLen) {
    throw ValidationError(fmt::format("seq_len must be at least {}, got {}", kMinSeqLen, seq_len));
  }
  std::vector<PackedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    if (ex.input_ids.size() > seq_len || ex.target_ids.size() > target_len) {
      throw ValidationError(fmt::format("example ({} input / {} target tokens) exceeds {} / {}",
                                        ex.input_ids.size(), ex.target_ids.size(), seq_len, target_len));
    }
    PackedExample p;
    p.input_len = static_cast<std::uint32_t>(ex.input_ids.size());
    p.target_len = static_cast<std::uint32_t>(ex.target_ids.size());
    p.input_ids = ex.input_ids;
    p.input_ids.resize(seq_len, pad);
    p.target_ids = ex.target_ids;
    p.target_ids.resize(target_len, pad);
    out.push_back(std::move(p));
  }
  return out;
}

// -- files ------------------------------------------------------------------------------------

ExampleWriter::ExampleWriter(const std::filesystem::path& path,
                             std::optional<std::filesystem::path> debug_jsonl)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot create " + path.string());
  out_.write(kExampleFileMagic.data(), static_cast<std::streamsize>(kExampleFileMagic.size()));
  detail::put_u32(out_, kExampleFileVersion);
  bytes_ = kExampleFileMagic.size() + 4;
  if (debug_jsonl) {
    debug_.emplace(*debug_jsonl, std::ios::binary | std::ios::trunc);
    if (!*debug_) throw Error("cannot create " + debug_jsonl->string());
  }
}

void ExampleWriter::write(std::span<const TokenId> input, std::span<const TokenId> target) {
  std::string rec;
  rec.reserve(8 + 4 * (input.size() + target.size()));
  detail::append_u32(rec, static_cast<std::uint32_t>(input.size()));
  for (auto id : input) detail::append_u32(rec, id);
  detail::append_u32(rec, static_cast<std::uint32_t>(target.size()));
  for (auto id : target) detail::append_u32(rec, id);
  out_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  if (!out_) throw Error("example write failed");
  bytes_ += rec.size();
  ++records_;
  if (debug_) {
    *debug_ << nlohmann::json{{"input_ids", input}, {"target_ids", target}}.dump() << '\n';
  }
}

void ExampleWriter::close() {
  out_.close();
  if (debug_) debug_->close();
}

ExampleReader::ExampleReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw Error("cannot open " + path.string());
  detail::expect_magic(in_, kExampleFileMagic);
  if (detail::get_u32(in_) != kExampleFileVersion) throw Error("unsupported example file version");
}

std::optional<SpanCorruptionExample> ExampleReader::next() {
  if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;
  SpanCorruptionExample ex;
  ex.input_ids.resize(detail::get_u32(in_));
  for (auto& id : ex.input_ids) id = detail::get_u32(in_);
  ex.target_ids.resize(detail::get_u32(in_));
  for (auto& id : ex.target_ids) id = detail::get_u32(in_);
  return ex;
}

std::string sidecar_to_json(const ExampleSidecar& sidecar) { return nlohmann::json(sidecar).dump(2); }

}  // namespace nahr
