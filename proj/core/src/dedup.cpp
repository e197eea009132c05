// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/dedup.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "json_io.hpp"
#include "nahr/unicode.hpp"
#include "parallel.hpp"

namespace nahr {
namespace {

constexpr std::string_view kFingerprintMagic = "NAHRFPS1";
constexpr std::string_view kLshMagic = "NAHRLSH1";
constexpr std::size_t kBatch = 1024;

// Raw (unsorted, possibly repeated) shingle hashes.
std::vector<std::uint64_t> raw_shingles(std::string_view text, std::uint32_t n) {
  const auto words = unicode::split_words(text);
  if (words.size() < n) {
    throw TooShortToShingle(
        fmt::format("too short to shingle: {} words, need {}", words.size(), n));
  }
  std::vector<std::uint64_t> word_hash(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) word_hash[i] = hash64(words[i]);
  std::vector<std::uint64_t> out(words.size() - n + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (std::uint32_t j = 0; j < n; ++j) h = mix64(h ^ word_hash[i + j]) + j;
    out[i] = h;
  }
  return out;
}

double sorted_jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

void MinHashParams::validate() const {
  if (k < 16) throw ValidationError(fmt::format("dedup.k must be >= 16, got {}", k));
  if (bands == 0 || rows == 0 || static_cast<std::uint64_t>(bands) * rows != k) {
    throw ValidationError(
        fmt::format("dedup.bands ({}) x dedup.rows ({}) must equal dedup.k ({})", bands, rows, k));
  }
  if (shingle_n == 0) throw ValidationError("dedup.shingle_n must be positive");
  if (!(jaccard_threshold > 0.0 && jaccard_threshold <= 1.0)) {
    throw ValidationError("dedup.jaccard_threshold must be in (0,1]");
  }
}

std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::uint32_t n) {
  auto out = raw_shingles(text, n);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PermutationFamily::PermutationFamily(std::uint32_t k, std::uint64_t seed) : mul_(k), add_(k) {
  const std::uint64_t base = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint32_t i = 0; i < k; ++i) {
    mul_[i] = mix64(base + 2 * static_cast<std::uint64_t>(i) + 1) | 1ULL;
    add_[i] = mix64(base + 2 * static_cast<std::uint64_t>(i) + 2);
  }
}

std::vector<std::uint64_t> PermutationFamily::minima(std::span<const std::uint64_t> shingles) const {
  const std::size_t k = mul_.size();
  std::vector<std::uint64_t> mins(k, std::numeric_limits<std::uint64_t>::max());
  const std::uint64_t* mul = mul_.data();
  const std::uint64_t* add = add_.data();
  std::uint64_t* m = mins.data();
  for (const std::uint64_t x : shingles) {
    for (std::size_t i = 0; i < k; ++i) {
      // Odd multiply plus xorshift: a bijection on 64-bit words.
      std::uint64_t v = x * mul[i] + add[i];
      v ^= v >> 31;
      m[i] = v < m[i] ? v : m[i];
    }
  }
  return mins;
}

MinHasher::MinHasher(const MinHashParams& params)
    : params_(params), family_((params.validate(), params.k), params.seed) {}

MinHashSignature MinHasher::signature(std::string_view text) const {
  const auto shingles = raw_shingles(text, params_.shingle_n);
  MinHashSignature sig;
  sig.shingle_n = params_.shingle_n;
  sig.values = family_.minima(shingles);
  return sig;
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.values.size() != b.values.size() || a.values.empty()) {
    throw ValidationError("signatures must have the same non-zero length");
  }
  std::size_t equal = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) equal += a.values[i] == b.values[i];
  return static_cast<double>(equal) / static_cast<double>(a.values.size());
}

Fingerprint128 exact_fingerprint(const Document& doc) { return fingerprint128(doc.text); }

// -- DedupIndex -----------------------------------------------------------------------

DedupIndex::DedupIndex(const MinHashParams& params) : params_(params), bands_(params.bands) {
  params_.validate();
}

std::uint64_t DedupIndex::band_key(const MinHashSignature& sig, std::uint32_t band) const {
  std::uint64_t h = mix64(params_.seed + band + 1);
  const std::size_t base = static_cast<std::size_t>(band) * params_.rows;
  for (std::uint32_t r = 0; r < params_.rows; ++r) h = mix64(h ^ sig.values[base + r]);
  return h;
}

std::vector<std::uint32_t> DedupIndex::candidates(const MinHashSignature& sig) const {
  if (sig.values.size() != params_.k) throw ValidationError("signature length differs from index k");
  std::vector<std::uint32_t> out;
  for (std::uint32_t b = 0; b < params_.bands; ++b) {
    const auto it = bands_[b].find(band_key(sig, b));
    if (it != bands_[b].end()) out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double DedupIndex::similarity(std::uint32_t slot, const MinHashSignature& sig) const {
  const std::uint32_t* stored = compact_sigs_.data() + static_cast<std::size_t>(slot) * params_.k;
  std::size_t equal = 0;
  for (std::size_t i = 0; i < params_.k; ++i) {
    equal += stored[i] == static_cast<std::uint32_t>(sig.values[i] >> 32);
  }
  return static_cast<double>(equal) / static_cast<double>(params_.k);
}

std::uint32_t DedupIndex::add(const Fingerprint128& id, const MinHashSignature& sig) {
  if (sig.values.size() != params_.k) throw ValidationError("signature length differs from index k");
  const auto slot = static_cast<std::uint32_t>(slot_ids_.size());
  slot_ids_.push_back(id);
  for (const auto v : sig.values) compact_sigs_.push_back(static_cast<std::uint32_t>(v >> 32));
  for (std::uint32_t b = 0; b < params_.bands; ++b) bands_[b][band_key(sig, b)].push_back(slot);
  return slot;
}

void DedupIndex::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::vector<Fingerprint128> fps(exact_.begin(), exact_.end());
    std::sort(fps.begin(), fps.end());
    std::ofstream out(dir / "fingerprints.bin", std::ios::binary | std::ios::trunc);
    out.write(kFingerprintMagic.data(), static_cast<std::streamsize>(kFingerprintMagic.size()));
    detail::put_u32(out, kDedupIndexFormatVersion);
    detail::put_u64(out, fps.size());
    for (const auto& f : fps) {
      detail::put_u64(out, f.hi);
      detail::put_u64(out, f.lo);
    }
    if (!out) throw Error("failed writing " + (dir / "fingerprints.bin").string());
  }
  std::ofstream out(dir / "lsh.bin", std::ios::binary | std::ios::trunc);
  out.write(kLshMagic.data(), static_cast<std::streamsize>(kLshMagic.size()));
  detail::put_u32(out, kDedupIndexFormatVersion);
  const std::string params_json = nlohmann::json(params_).dump();
  detail::put_u32(out, static_cast<std::uint32_t>(params_json.size()));
  out.write(params_json.data(), static_cast<std::streamsize>(params_json.size()));
  detail::put_u64(out, slot_ids_.size());
  for (std::size_t s = 0; s < slot_ids_.size(); ++s) {
    detail::put_u64(out, slot_ids_[s].hi);
    detail::put_u64(out, slot_ids_[s].lo);
    for (std::size_t i = 0; i < params_.k; ++i) detail::put_u32(out, compact_sigs_[s * params_.k + i]);
  }
  for (const auto& table : bands_) {
    std::vector<std::pair<std::uint64_t, const std::vector<std::uint32_t>*>> buckets;
    buckets.reserve(table.size());
    for (const auto& [key, slots] : table) buckets.emplace_back(key, &slots);
    std::sort(buckets.begin(), buckets.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    detail::put_u64(out, buckets.size());
    for (const auto& [key, slots] : buckets) {
      detail::put_u64(out, key);
      detail::put_u32(out, static_cast<std::uint32_t>(slots->size()));
      for (auto s : *slots) detail::put_u32(out, s);
    }
  }
  if (!out) throw Error("failed writing " + (dir / "lsh.bin").string());
}

DedupIndex DedupIndex::load(const std::filesystem::path& dir) {
  std::ifstream lsh(dir / "lsh.bin", std::ios::binary);
  if (!lsh) throw Error("missing " + (dir / "lsh.bin").string());
  detail::expect_magic(lsh, kLshMagic);
  if (detail::get_u32(lsh) != kDedupIndexFormatVersion) throw Error("unsupported dedup index version");
  std::string params_json(detail::get_u32(lsh), '\0');
  lsh.read(params_json.data(), static_cast<std::streamsize>(params_json.size()));
  DedupIndex index(json_io::parse(params_json, "dedup index params").get<MinHashParams>());
  const auto k = index.params_.k;
  const auto slots = detail::get_u64(lsh);
  index.slot_ids_.reserve(slots);
  index.compact_sigs_.reserve(slots * k);
  for (std::uint64_t s = 0; s < slots; ++s) {
    Fingerprint128 f;
    f.hi = detail::get_u64(lsh);
    f.lo = detail::get_u64(lsh);
    index.slot_ids_.push_back(f);
    for (std::uint32_t i = 0; i < k; ++i) index.compact_sigs_.push_back(detail::get_u32(lsh));
  }
  for (auto& table : index.bands_) {
    const auto buckets = detail::get_u64(lsh);
    for (std::uint64_t b = 0; b < buckets; ++b) {
      const auto key = detail::get_u64(lsh);
      auto& vec = table[key];
      const auto n = detail::get_u32(lsh);
      for (std::uint32_t i = 0; i < n; ++i) vec.push_back(detail::get_u32(lsh));
    }
  }

  std::ifstream fps(dir / "fingerprints.bin", std::ios::binary);
  if (!fps) throw Error("missing " + (dir / "fingerprints.bin").string());
  detail::expect_magic(fps, kFingerprintMagic);
  if (detail::get_u32(fps) != kDedupIndexFormatVersion) throw Error("unsupported fingerprint file version");
  const auto count = detail::get_u64(fps);
  for (std::uint64_t i = 0; i < count; ++i) {
    Fingerprint128 f;
    f.hi = detail::get_u64(fps);
    f.lo = detail::get_u64(fps);
    index.exact_.insert(f);
  }
  return index;
}

// -- Deduplicator -----------------------------------------------------------------------

Deduplicator::Deduplicator(const MinHashParams& params) : hasher_(params), index_(params) {}

bool Deduplicator::strip_seen_paragraphs(Document& doc) {
  std::string kept;
  std::string_view text = doc.text;
  bool changed = false;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    if (!line.empty()) {
      if (paragraphs_.insert(fingerprint128(line)).second) {
        if (!kept.empty()) kept.push_back('\n');
        kept.append(line);
      } else {
        changed = true;
      }
    }
    start = end + 1;
  }
  if (kept.empty()) return false;
  if (changed) doc = document_from_normalized(std::move(kept), doc.source);
  return true;
}

DedupDecision Deduplicator::offer(Document& doc) { return offer(doc, std::nullopt); }

DedupDecision Deduplicator::offer(Document& doc, std::optional<MinHashSignature> precomputed) {
  const auto& params = hasher_.params();
  DedupDecision decision;
  if (params.granularity == DedupGranularity::paragraph) {
    const auto before = doc.doc_id;
    if (!strip_seen_paragraphs(doc)) {
      decision.outcome = DedupOutcome::exact_duplicate;
      ++report_.exact_dropped;
      return decision;
    }
    if (doc.doc_id != before) precomputed.reset();
  }

  const Fingerprint128 fp = exact_fingerprint(doc);
  if (index_.contains_exact(fp)) {
    decision.outcome = DedupOutcome::exact_duplicate;
    decision.witness = fp;
    decision.similarity = 1.0;
    ++report_.exact_dropped;
    return decision;
  }

  std::optional<MinHashSignature> sig = std::move(precomputed);
  if (!sig) {
    try {
      sig = hasher_.signature(doc.text);
    } catch (const TooShortToShingle&) {
      decision.shingled = false;
    }
  }
  if (!sig) {
    index_.insert_exact(fp);
    ++report_.kept;
    ++report_.too_short;
    return decision;
  }

  std::vector<std::uint64_t> shingles;
  if (params.exact_verify) shingles = shingle_hashes(doc.text, params.shingle_n);
  for (const auto slot : index_.candidates(*sig)) {
    const double sim = params.exact_verify ? sorted_jaccard(shingle_sets_[slot], shingles)
                                           : index_.similarity(slot, *sig);
    if (sim >= params.jaccard_threshold) {
      decision.outcome = DedupOutcome::near_duplicate;
      decision.witness = index_.slot_id(slot);
      decision.similarity = sim;
      ++report_.near_dropped;
      return decision;
    }
  }
  index_.insert_exact(fp);
  index_.add(fp, *sig);
  if (params.exact_verify) shingle_sets_.push_back(std::move(shingles));
  ++report_.kept;
  return decision;
}

DedupResult dedup_stream(std::vector<Document> docs, const MinHashParams& params, unsigned workers) {
  Deduplicator dedup(params);
  DedupResult result;
  result.decisions.reserve(docs.size());
  const bool precompute = params.granularity == DedupGranularity::document && workers > 1;
  std::vector<std::optional<MinHashSignature>> sigs;
  for (std::size_t begin = 0; begin < docs.size(); begin += kBatch) {
    const std::size_t end = std::min(docs.size(), begin + kBatch);
    sigs.assign(end - begin, std::nullopt);
    if (precompute) {
      detail::parallel_for(end - begin, workers, [&](std::size_t i) {
        try {
          sigs[i] = dedup.hasher().signature(docs[begin + i].text);
        } catch (const TooShortToShingle&) {
        }
      });
    }
    for (std::size_t i = begin; i < end; ++i) {
      auto decision = dedup.offer(docs[i], std::move(sigs[i - begin]));
      if (decision.outcome == DedupOutcome::kept) result.kept.push_back(std::move(docs[i]));
      result.decisions.push_back(std::move(decision));
    }
  }
  result.report = dedup.report();
  return result;
}

}  // namespace nahr
