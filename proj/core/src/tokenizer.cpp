// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/tokenizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <unordered_set>

#include "json_io.hpp"
#include "nahr/error.hpp"
#include "nahr/unicode.hpp"

namespace nahr {
namespace {

constexpr std::string_view kVocabFormat = "nahr-subword-vocab";
constexpr int kVocabVersion = 1;

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}
std::uint32_t pair_left(std::uint64_t k) { return static_cast<std::uint32_t>(k >> 32); }
std::uint32_t pair_right(std::uint64_t k) { return static_cast<std::uint32_t>(k); }

// Incremental BPE state. Pair counts are maintained exactly by removing a
// word's pairs before a merge rewrites it and adding them back afterwards.
class MergeTable {
 public:
  MergeTable(const std::map<std::string, std::uint64_t>& word_counts) {
    for (const auto& [word, count] : word_counts) {
      Word w;
      w.count = static_cast<std::int64_t>(count);
      for (auto& cp : split_code_points(word)) w.syms.push_back(intern(cp));
      words_.push_back(std::move(w));
    }
    for (std::uint32_t wi = 0; wi < words_.size(); ++wi) add_pairs(wi);
    for (const auto& [key, count] : counts_) push(key);
  }

  std::vector<std::string> alphabet() const {
    std::vector<std::string> out(symbols_.begin(), symbols_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  // Best pair with count >= 2, or nullopt.
  std::optional<std::uint64_t> best() {
    while (!heap_.empty()) {
      const auto top = heap_.top();
      const auto it = counts_.find(top.key);
      if (it == counts_.end() || it->second != top.count) {
        heap_.pop();
        continue;
      }
      if (top.count < 2) return std::nullopt;
      return top.key;
    }
    return std::nullopt;
  }

  const std::string& str(std::uint32_t sym) const { return symbols_[sym]; }

  void apply(std::uint64_t key) {
    const std::uint32_t a = pair_left(key), b = pair_right(key);
    const std::uint32_t merged = intern(symbols_[a] + symbols_[b]);
    ++generation_;
    touched_.clear();
    auto where = std::move(where_[key]);
    where_.erase(key);
    for (const auto wi : where) {
      Word& w = words_[wi];
      if (w.stamp == generation_) continue;
      w.stamp = generation_;
      bool has = false;
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        if (w.syms[i] == a && w.syms[i + 1] == b) {
          has = true;
          break;
        }
      }
      if (!has) continue;
      remove_pairs(wi);
      std::vector<std::uint32_t> out;
      out.reserve(w.syms.size());
      for (std::size_t i = 0; i < w.syms.size();) {
        if (i + 1 < w.syms.size() && w.syms[i] == a && w.syms[i + 1] == b) {
          out.push_back(merged);
          i += 2;
        } else {
          out.push_back(w.syms[i]);
          ++i;
        }
      }
      w.syms = std::move(out);
      add_pairs(wi);
    }
    std::sort(touched_.begin(), touched_.end());
    touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
    for (const auto k : touched_) {
      const auto it = counts_.find(k);
      if (it == counts_.end()) continue;
      if (it->second <= 0) {
        counts_.erase(it);
      } else {
        push(k);
      }
    }
  }

 private:
  struct Word {
    std::vector<std::uint32_t> syms;
    std::int64_t count = 0;
    std::uint64_t stamp = 0;
  };
  struct Entry {
    std::int64_t count;
    std::uint64_t key;
    std::string merged;
    std::size_t left_len;
  };
  struct Worse {
    bool operator()(const Entry& x, const Entry& y) const {
      if (x.count != y.count) return x.count < y.count;
      if (x.merged != y.merged) return x.merged > y.merged;
      return x.left_len > y.left_len;
    }
  };

  std::uint32_t intern(const std::string& s) {
    const auto [it, inserted] = ids_.try_emplace(s, static_cast<std::uint32_t>(symbols_.size()));
    if (inserted) symbols_.push_back(s);
    return it->second;
  }

  void push(std::uint64_t key) {
    heap_.push(Entry{counts_[key], key, symbols_[pair_left(key)] + symbols_[pair_right(key)],
                     symbols_[pair_left(key)].size()});
  }

  void add_pairs(std::uint32_t wi) {
    const Word& w = words_[wi];
    for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
      const auto k = pair_key(w.syms[i], w.syms[i + 1]);
      counts_[k] += w.count;
      where_[k].push_back(wi);
      touched_.push_back(k);
    }
  }

  void remove_pairs(std::uint32_t wi) {
    const Word& w = words_[wi];
    for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
      const auto k = pair_key(w.syms[i], w.syms[i + 1]);
      counts_[k] -= w.count;
      touched_.push_back(k);
    }
  }

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<Word> words_;
  std::unordered_map<std::uint64_t, std::int64_t> counts_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where_;
  std::priority_queue<Entry, std::vector<Entry>, Worse> heap_;
  std::vector<std::uint64_t> touched_;
  std::uint64_t generation_ = 0;
};

}  // namespace

std::vector<std::string> split_code_points(std::string_view word) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < word.size()) {
    const std::size_t start = pos;
    unicode::next_code_point(word, pos);
    out.emplace_back(word.substr(start, pos - start));
  }
  return out;
}

// -- SubwordVocab -----------------------------------------------------------------------

SubwordVocab::SubwordVocab(std::vector<std::string> pieces, std::uint32_t num_sentinels,
                           std::uint32_t target_size)
    : pieces_(std::move(pieces)), num_sentinels_(num_sentinels), target_size_(target_size) {
  for (std::uint32_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    if (p.empty()) throw Error(fmt::format("vocabulary piece {} is empty", i));
    if (!unicode::is_valid_utf8(p)) throw Error(fmt::format("vocabulary piece {} is not UTF-8", i));
    if (p.find_first_of("\t\n") != std::string::npos) {
      throw Error(fmt::format("vocabulary piece {} contains a tab or newline", i));
    }
    if (!rank_.emplace(p, i).second) throw Error(fmt::format("duplicate vocabulary piece `{}`", p));
  }
  if (static_cast<std::uint64_t>(pieces_.size()) + kFixedSpecials + num_sentinels_ > target_size_) {
    throw Error(fmt::format("vocabulary of {} pieces + {} specials exceeds target size {}",
                            pieces_.size(), kFixedSpecials + num_sentinels_, target_size_));
  }
}

SpecialTokens SubwordVocab::special_tokens() const noexcept {
  return SpecialTokens{kPad, kEos, kUnk, size(), num_sentinels_};
}

std::optional<TokenId> SubwordVocab::piece_id(std::string_view piece) const {
  const auto it = rank_.find(std::string(piece));
  if (it == rank_.end()) return std::nullopt;
  return kFixedSpecials + it->second;
}

std::optional<std::uint32_t> SubwordVocab::piece_rank(std::string_view piece) const {
  const auto it = rank_.find(std::string(piece));
  if (it == rank_.end()) return std::nullopt;
  return it->second;
}

TokenId SubwordVocab::sentinel_id(std::uint32_t index) const {
  if (index >= num_sentinels_) {
    throw ValidationError(fmt::format("sentinel {} out of range ({} sentinels)", index, num_sentinels_));
  }
  return special_tokens().sentinel(index);
}

std::string SubwordVocab::id_to_string(TokenId id) const {
  if (id >= size()) throw Error(fmt::format("token id {} out of range (vocab size {})", id, size()));
  if (id == kPad) return "<pad>";
  if (id == kEos) return "</s>";
  if (id == kUnk) return "<unk>";
  const auto special = special_tokens();
  if (special.is_sentinel(id)) return fmt::format("<extra_id_{}>", special.sentinel_index(id));
  return pieces_[id - kFixedSpecials];
}

std::string SubwordVocab::serialize() const {
  nlohmann::json header = {
      {"format", kVocabFormat},
      {"version", kVocabVersion},
      {"algorithm", "bpe"},
      {"target_size", target_size_},
      {"pieces", pieces_.size()},
      {"specials",
       {{"pad", kPad},
        {"eos", kEos},
        {"unk", kUnk},
        {"num_sentinels", num_sentinels_},
        {"sentinel_0", num_sentinels_ > 0 ? size() - 1 : 0},
        {"sentinel_format", "<extra_id_N>"}}},
  };
  std::string out = header.dump() + "\n";
  for (std::uint32_t i = 0; i < pieces_.size(); ++i) out += fmt::format("{}\t{}\n", pieces_[i], i);
  return out;
}

SubwordVocab SubwordVocab::parse(std::string_view text) {
  const auto nl = text.find('\n');
  if (nl == std::string_view::npos) throw Error("vocabulary file has no header line");
  const auto header = json_io::parse(text.substr(0, nl), "vocabulary header");
  try {
    if (header.at("format").get<std::string>() != kVocabFormat) throw Error("not a nahr vocabulary file");
    if (header.at("version").get<int>() != kVocabVersion) throw Error("unsupported vocabulary version");
    const auto& sp = header.at("specials");
    if (sp.at("pad").get<TokenId>() != kPad || sp.at("eos").get<TokenId>() != kEos ||
        sp.at("unk").get<TokenId>() != kUnk) {
      throw Error("vocabulary specials must be pad=0, eos=1, unk=2");
    }
    const auto num_sentinels = sp.at("num_sentinels").get<std::uint32_t>();
    const auto target = header.at("target_size").get<std::uint32_t>();
    const auto expected = header.at("pieces").get<std::size_t>();

    std::vector<std::string> pieces;
    pieces.reserve(expected);
    std::size_t start = nl + 1;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      const auto line = text.substr(start, end - start);
      start = end + 1;
      if (line.empty()) continue;
      const auto tab = line.rfind('\t');
      if (tab == std::string_view::npos) throw Error("vocabulary line without a tab");
      std::uint32_t rank = 0;
      const auto r = line.substr(tab + 1);
      const auto [p, ec] = std::from_chars(r.data(), r.data() + r.size(), rank);
      if (ec != std::errc() || p != r.data() + r.size()) throw Error("bad rank in vocabulary line");
      if (rank != pieces.size()) {
        throw Error(fmt::format("vocabulary rank {} out of order (expected {})", rank, pieces.size()));
      }
      pieces.emplace_back(line.substr(0, tab));
    }
    if (pieces.size() != expected) {
      throw Error(fmt::format("vocabulary header declares {} pieces, file has {}", expected, pieces.size()));
    }
    SubwordVocab vocab(std::move(pieces), num_sentinels, target);
    if (num_sentinels > 0 && sp.contains("sentinel_0") &&
        sp.at("sentinel_0").get<std::uint32_t>() != vocab.size() - 1) {
      throw Error("vocabulary sentinel_0 id does not match the layout");
    }
    return vocab;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed vocabulary header: ") + e.what());
  }
}

void SubwordVocab::save(const std::filesystem::path& path) const {
  json_io::write_file_atomic(path, serialize());
}

SubwordVocab SubwordVocab::load(const std::filesystem::path& path) {
  return parse(json_io::read_file(path));
}

// -- training -------------------------------------------------------------------------------

VocabTrainer::VocabTrainer(TokenizerTrainingConfig config) : config_(config) {}

void VocabTrainer::add_text(std::string_view text) {
  std::string key;
  for (const auto w : unicode::split_words(text)) {
    key.assign(kWordBoundary);
    key.append(w);
    ++word_counts_[key];
    ++words_seen_;
  }
}

TrainedVocab VocabTrainer::train() const {
  if (word_counts_.empty()) throw ValidationError("tokenizer training corpus is empty");
  MergeTable table(word_counts_);
  std::vector<std::string> pieces = table.alphabet();
  const std::uint64_t specials = SubwordVocab::kFixedSpecials + config_.num_sentinels;
  if (pieces.size() + specials > config_.target_size) {
    throw ValidationError(fmt::format(
        "target_size {} is too small for an alphabet of {} characters plus {} specials",
        config_.target_size, pieces.size(), specials));
  }
  std::unordered_set<std::string> present(pieces.begin(), pieces.end());
  std::vector<std::pair<std::string, std::string>> merges;
  while (pieces.size() + specials < config_.target_size) {
    const auto best = table.best();
    if (!best) break;
    const std::string& left = table.str(pair_left(*best));
    const std::string& right = table.str(pair_right(*best));
    merges.emplace_back(left, right);
    std::string merged = left + right;
    if (present.insert(merged).second) pieces.push_back(std::move(merged));
    table.apply(*best);
  }
  return TrainedVocab{SubwordVocab(std::move(pieces), config_.num_sentinels, config_.target_size),
                      std::move(merges)};
}

TrainedVocab train_vocab(std::span<const std::string> corpus, TokenizerTrainingConfig config) {
  VocabTrainer trainer(config);
  for (const auto& text : corpus) trainer.add_text(text);
  return trainer.train();
}

// -- encode / decode -------------------------------------------------------------------------

Encoder::Encoder(const SubwordVocab& vocab, std::size_t cache_limit)
    : vocab_(vocab), cache_limit_(cache_limit) {}

const std::vector<TokenId>& Encoder::encode_word(std::string_view word) {
  std::string key;
  key.reserve(kWordBoundary.size() + word.size());
  key.append(kWordBoundary);
  key.append(word);
  if (const auto it = cache_.find(key); it != cache_.end()) return it->second;

  std::vector<std::string> syms = split_code_points(key);
  std::string joined;
  for (;;) {
    std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
    std::size_t best_at = syms.size();
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      joined.assign(syms[i]);
      joined.append(syms[i + 1]);
      if (const auto r = vocab_.piece_rank(joined); r && *r < best_rank) {
        best_rank = *r;
        best_at = i;
      }
    }
    if (best_at == syms.size()) break;
    syms[best_at] += syms[best_at + 1];
    syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(best_at) + 1);
  }
  std::vector<TokenId> ids;
  ids.reserve(syms.size());
  for (const auto& s : syms) ids.push_back(vocab_.piece_id(s).value_or(SubwordVocab::kUnk));

  if (cache_.size() >= cache_limit_) cache_.clear();
  return cache_.emplace(std::move(key), std::move(ids)).first->second;
}

void Encoder::encode_append(std::string_view text, TokenSequence& out) {
  for (const auto w : unicode::split_words(text)) {
    const auto& ids = encode_word(w);
    out.insert(out.end(), ids.begin(), ids.end());
  }
}

TokenSequence Encoder::encode(std::string_view text) {
  TokenSequence out;
  encode_append(text, out);
  return out;
}

TokenSequence encode(const SubwordVocab& vocab, std::string_view text) {
  Encoder enc(vocab, 0);
  return enc.encode(text);
}

std::string decode(const SubwordVocab& vocab, std::span<const TokenId> ids) {
  std::string out;
  const auto special = vocab.special_tokens();
  for (const TokenId id : ids) {
    if (id >= vocab.size()) {
      throw Error(fmt::format("token id {} out of range (vocab size {})", id, vocab.size()));
    }
    if (id == SubwordVocab::kPad || id == SubwordVocab::kEos) continue;
    if (id == SubwordVocab::kUnk || special.is_sentinel(id)) {
      out += vocab.id_to_string(id);
      continue;
    }
    const auto& piece = vocab.pieces()[id - SubwordVocab::kFixedSpecials];
    std::size_t start = 0;
    for (;;) {
      const auto at = piece.find(kWordBoundary, start);
      out.append(piece, start, at == std::string::npos ? std::string::npos : at - start);
      if (at == std::string::npos) break;
      out.push_back(' ');
      start = at + kWordBoundary.size();
    }
  }
  if (!out.empty() && out.front() == ' ') out.erase(0, 1);
  return out;
}

}  // namespace nahr
