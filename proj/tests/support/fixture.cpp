// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixture.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <fstream>
#include <memory>
#include <set>
#include <stdexcept>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace nahr::testing {
namespace {

void append_cp(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

using Lines = std::vector<std::vector<std::string>>;

Lines random_lines(const std::vector<std::string>& lexicon, std::size_t words, std::mt19937_64& rng) {
  Lines lines;
  while (words > 0) {
    const std::size_t n = std::min(words, uniform(rng, 6, 14));
    std::vector<std::string> line;
    for (std::size_t i = 0; i < n; ++i) line.push_back(lexicon[uniform(rng, 0, lexicon.size() - 1)]);
    if (uniform(rng, 0, 3) == 0) line.back() += "\xD8\x8C";  // Arabic comma
    lines.push_back(std::move(line));
    words -= n;
  }
  lines.back().back() += ".";
  return lines;
}

std::string render(const Lines& lines) {
  std::string out;
  for (const auto& line : lines) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out += ' ';
      out += line[i];
    }
    out += '\n';
  }
  out.pop_back();
  return out;
}

// Same text after whitespace cleanup and NFKC.
std::string exact_variant(const Lines& lines, std::mt19937_64& rng) {
  std::string out;
  const int kind = static_cast<int>(uniform(rng, 0, 2));
  for (const auto& line : lines) {
    if (kind == 0) out += "  ";
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out += kind == 1 ? " \t " : " ";
      if (kind == 2 && line[i].rfind("\xD8\xA7", 0) == 0) {
        out += "\xEF\xBA\x8D";  // alef isolated presentation form
        out += line[i].substr(2);
      } else {
        out += line[i];
      }
    }
    out += kind == 0 ? "  \r\n" : "\n";
  }
  return out;
}

std::string noise_doc(const std::vector<std::string>& lexicon, std::mt19937_64& rng) {
  switch (uniform(rng, 0, 4)) {
    case 0: {  // Latin script
      std::string out;
      for (std::size_t i = 0, n = uniform(rng, 80, 300); i < n; ++i) {
        for (std::size_t k = 0, len = uniform(rng, 2, 8); k < len; ++k) out.push_back(static_cast<char>('a' + uniform(rng, 0, 25)));
        out += i % 11 == 10 ? '\n' : ' ';
      }
      return out;
    }
    case 1: {  // digit heavy
      std::string out;
      for (std::size_t i = 0, n = uniform(rng, 60, 200); i < n; ++i) {
        out += std::to_string(uniform(rng, 100000, 99999999));
        out += ' ';
        out += lexicon[uniform(rng, 0, lexicon.size() - 1)];
        out += i % 9 == 8 ? '\n' : ' ';
      }
      return out;
    }
    case 2: {  // one line over and over
      const auto line = render(random_lines(lexicon, 12, rng));
      std::string out;
      for (std::size_t i = 0, n = uniform(rng, 20, 60); i < n; ++i) out += line + "\n";
      return out;
    }
    case 3: {  // too short
      return lexicon[uniform(rng, 0, lexicon.size() - 1)] + " " + lexicon[uniform(rng, 0, lexicon.size() - 1)];
    }
    default: {  // one word dominates
      const auto& w = lexicon[uniform(rng, 0, lexicon.size() - 1)];
      auto lines = random_lines(lexicon, uniform(rng, 100, 300), rng);
      for (auto& line : lines) {
        for (std::size_t i = 0; i < line.size(); i += 3) line[i] = w;
      }
      return render(lines);
    }
  }
}

std::string invalid_payload(std::mt19937_64& rng) {
  std::string out;
  for (std::size_t i = 0, n = uniform(rng, 200, 800); i < n; ++i) {
    out.push_back(static_cast<char>(uniform(rng, 0, 9) < 3 ? uniform(rng, 0x80, 0xBF) : uniform(rng, 'a', 'z')));
  }
  return out;
}

std::string wet_record(const std::string& payload, std::uint64_t n) {
  std::string out = "WARC/1.0\r\nWARC-Type: conversion\r\n";
  out += "WARC-Target-URI: https://fixture.example/doc/" + std::to_string(n) + "\r\n";
  out += "WARC-Date: 2021-06-01T00:00:00Z\r\n";
  out += "WARC-Record-ID: <urn:uuid:" + std::to_string(n) + ">\r\n";
  out += "Content-Type: text/plain\r\n";
  out += "Content-Length: " + std::to_string(payload.size()) + "\r\n\r\n";
  out += payload;
  out += "\r\n\r\n";
  return out;
}

std::string warcinfo() {
  const std::string body = "software: fixture\r\nformat: WARC File Format 1.0\r\n";
  return "WARC/1.0\r\nWARC-Type: warcinfo\r\nContent-Type: application/warc-fields\r\nContent-Length: " +
         std::to_string(body.size()) + "\r\n\r\n" + body + "\r\n\r\n";
}

Lines parse_lines(const std::string& text) {
  Lines lines(1);
  std::string word;
  for (const char c : text) {
    if (c == ' ' || c == '\n') {
      lines.back().push_back(std::move(word));
      word.clear();
      if (c == '\n') lines.emplace_back();
    } else {
      word.push_back(c);
    }
  }
  lines.back().push_back(std::move(word));
  return lines;
}

// Streams records into one shard file; WET (optionally gzipped) or JSONL.
class ShardSink {
 public:
  ShardSink(const fs::path& path, bool jsonl, bool gzip) : jsonl_(jsonl) {
    if (gzip) {
      gz_ = gzopen(path.c_str(), "wb1");
      if (gz_ == nullptr) throw std::runtime_error("cannot open " + path.string());
    } else {
      out_.open(path, std::ios::binary);
      if (!out_) throw std::runtime_error("cannot open " + path.string());
    }
    if (!jsonl_) put(warcinfo());
  }
  ~ShardSink() {
    if (gz_ != nullptr) gzclose(gz_);
  }
  ShardSink(const ShardSink&) = delete;
  ShardSink& operator=(const ShardSink&) = delete;

  void add(const std::string& payload, std::uint64_t n) {
    if (jsonl_) {
      put(nlohmann::json{{"id", std::to_string(n)}, {"text", payload}}.dump() + "\n");
    } else {
      put(wet_record(payload, n));
    }
  }

 private:
  void put(const std::string& data) {
    if (gz_ != nullptr) {
      if (gzwrite(gz_, data.data(), static_cast<unsigned>(data.size())) != static_cast<int>(data.size())) {
        throw std::runtime_error("gzip write failed");
      }
    } else {
      out_ << data;
    }
  }

  bool jsonl_;
  gzFile gz_ = nullptr;
  std::ofstream out_;
};

}  // namespace

std::vector<std::string> make_lexicon(std::size_t n, std::mt19937_64& rng) {
  std::vector<char32_t> letters;
  for (char32_t c = 0x0621; c <= 0x063A; ++c) letters.push_back(c);
  for (char32_t c = 0x0641; c <= 0x064A; ++c) letters.push_back(c);
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string w;
    for (std::size_t k = 0, len = uniform(rng, 2, 8); k < len; ++k) append_cp(w, letters[uniform(rng, 0, letters.size() - 1)]);
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::string random_arabic_text(const std::vector<std::string>& lexicon, std::size_t words, std::mt19937_64& rng) {
  return render(random_lines(lexicon, words, rng));
}

FixtureTruth write_fixture(const fs::path& dir, const FixtureSpec& spec, const fs::path& output_dir) {
  fs::create_directories(dir);
  std::mt19937_64 rng(spec.seed);
  const auto lexicon = make_lexicon(spec.lexicon_size, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Consecutive shards by byte share: plain, gzip, plain, JSONL.
  const char* names[4] = {"part-00000.warc.wet", "part-00001.warc.wet.gz", "part-00002.warc.wet", "part-00003.jsonl"};
  const char* tags[4] = {"CC", "CC", "NEWS", "DIALECT"};
  const std::uint64_t cuts[4] = {spec.target_bytes * 35 / 100, spec.target_bytes * 60 / 100,
                                 spec.target_bytes * 85 / 100, spec.target_bytes};
  nlohmann::json sources = nlohmann::json::array();
  for (int s = 0; s < 4; ++s) {
    sources.push_back({{"path", names[s]}, {"format", s < 3 ? "wet" : "jsonl"}, {"source", tags[s]}});
  }

  FixtureTruth truth;
  truth.dir = dir;
  for (const auto* name : names) truth.shards.push_back(dir / name);
  // Bounded pool of base documents that duplicates copy from.
  constexpr std::size_t kPool = 100000;
  std::vector<std::string> bases;
  std::vector<std::int64_t> base_ordinal;
  std::int64_t ordinal = 0;
  std::uint64_t record_no = 0;
  int shard = 0;
  auto sink = std::make_unique<ShardSink>(truth.shards[0], false, false);

  while (truth.bytes < spec.target_bytes) {
    while (shard < 3 && truth.bytes >= cuts[shard]) {
      ++shard;
      sink.reset();
      sink = std::make_unique<ShardSink>(truth.shards[shard], shard == 3, shard == 1);
    }
    const double r = unit(rng);
    std::string payload;
    if (bases.size() > 10 && r < spec.exact_dup_rate) {
      const std::size_t b = uniform(rng, 0, bases.size() - 1);
      payload = exact_variant(parse_lines(bases[b]), rng);
      truth.fates.push_back(Planted::exact_dup);
      truth.origin.push_back(base_ordinal[b]);
      truth.planted_jaccard.push_back(1.0);
      ++truth.exact;
      ++ordinal;
    } else if (bases.size() > 10 && r < spec.exact_dup_rate + spec.near_dup_rate) {
      const std::size_t b = uniform(rng, 0, bases.size() - 1);
      const std::string& original = bases[b];
      const Lines source = parse_lines(original);
      std::string text;
      double j = 0.0;
      do {
        Lines lines = source;
        switch (uniform(rng, 0, 2)) {
          case 0: {  // swap out one or two words
            for (std::size_t k = 0, n = uniform(rng, 1, 2); k < n; ++k) {
              auto& line = lines[uniform(rng, 0, lines.size() - 1)];
              line[uniform(rng, 0, line.size() - 1)] = lexicon[uniform(rng, 0, lexicon.size() - 1)];
            }
            break;
          }
          case 1: {  // append a short line
            std::vector<std::string> extra;
            for (std::size_t k = 0, n = uniform(rng, 3, 8); k < n; ++k) extra.push_back(lexicon[uniform(rng, 0, lexicon.size() - 1)]);
            lines.push_back(std::move(extra));
            break;
          }
          default: {  // drop a line
            if (lines.size() > 2) lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(uniform(rng, 0, lines.size() - 1)));
            break;
          }
        }
        text = render(lines);
        j = oracle::shingle_jaccard(text, original, 5);
      } while (j < 0.9 || j >= 1.0);
      payload = std::move(text);
      truth.fates.push_back(Planted::near_dup);
      truth.origin.push_back(base_ordinal[b]);
      truth.planted_jaccard.push_back(j);
      ++truth.near;
      ++ordinal;
    } else if (r < spec.exact_dup_rate + spec.near_dup_rate + spec.noise_rate) {
      payload = noise_doc(lexicon, rng);
      truth.fates.push_back(Planted::noise);
      truth.origin.push_back(-1);
      truth.planted_jaccard.push_back(0.0);
      ++truth.noise;
      ++ordinal;
    } else if (r < spec.exact_dup_rate + spec.near_dup_rate + spec.noise_rate + spec.invalid_utf8_rate) {
      payload = invalid_payload(rng);
      // JSON cannot carry ill-formed UTF-8; the JSONL shard gets none.
      if (shard == 3) continue;
      ++truth.invalid;
    } else {
      payload = random_arabic_text(lexicon, uniform(rng, spec.min_words, spec.max_words), rng);
      if (bases.size() < kPool) {
        bases.push_back(payload);
        base_ordinal.push_back(ordinal);
      } else {
        const std::size_t slot = uniform(rng, 0, kPool - 1);
        bases[slot] = payload;
        base_ordinal[slot] = ordinal;
      }
      ++ordinal;
      truth.fates.push_back(Planted::base);
      truth.origin.push_back(-1);
      truth.planted_jaccard.push_back(0.0);
      ++truth.base;
    }
    truth.bytes += payload.size();
    sink->add(payload, record_no++);
  }
  while (shard < 3) {  // tiny targets may leave later shards empty
    ++shard;
    sink.reset();
    sink = std::make_unique<ShardSink>(truth.shards[shard], shard == 3, shard == 1);
  }
  sink.reset();
  truth.records = record_no;

  nlohmann::json config = {{"sources", sources},
                           {"output_dir", output_dir.string()},
                           {"seed", spec.seed},
                           {"workers", 1},
                           {"seq_len", 512},
                           {"tokenizer", {{"target_size", 2000}, {"num_sentinels", 100}, {"sample_bytes", 4 << 20}}}};
  truth.config = dir / "pipeline.json";
  std::ofstream(truth.config) << config.dump(2) << '\n';
  return truth;
}

}  // namespace nahr::testing
