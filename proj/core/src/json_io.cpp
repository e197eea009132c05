// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "json_io.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nahr/error.hpp"

namespace nahr::json_io {

nlohmann::json parse(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("{}: invalid JSON: {}", what, e.what()));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const auto tmp = path.string() + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (f == nullptr) throw Error("cannot write " + tmp);
  const bool ok = std::fwrite(contents.data(), 1, contents.size(), f) == contents.size() &&
                  std::fflush(f) == 0 && ::fsync(::fileno(f)) == 0;
  if (std::fclose(f) != 0 || !ok) {
    std::remove(tmp.c_str());
    throw Error("failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(fmt::format("cannot rename {} to {}: {}", tmp, path.string(), ec.message()));
}

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> known,
                         std::string_view what) {
  if (!obj.is_object()) throw ValidationError(fmt::format("{}: expected a JSON object", what));
  for (const auto& [key, value] : obj.items()) {
    bool found = false;
    for (auto k : known) found = found || k == key;
    if (!found) throw ValidationError(fmt::format("{}: unknown key `{}`", what, key));
  }
}

}  // namespace nahr::json_io

namespace nahr {
namespace {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out, std::string_view what) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(fmt::format("{}: `{}` has the wrong type", what, key));
  }
}

}  // namespace

void to_json(nlohmann::json& j, const FilterConfig& c) {
  j = {{"min_chars", c.min_chars},
       {"max_chars", c.max_chars},
       {"min_arabic_ratio", c.min_arabic_ratio},
       {"max_digit_ratio", c.max_digit_ratio},
       {"max_punct_ratio", c.max_punct_ratio},
       {"max_repeated_line_ratio", c.max_repeated_line_ratio},
       {"max_top_word_ratio", c.max_top_word_ratio}};
}

void from_json(const nlohmann::json& j, FilterConfig& c) {
  constexpr std::string_view what = "filter config";
  json_io::reject_unknown_keys(j,
                               {"min_chars", "max_chars", "min_arabic_ratio", "max_digit_ratio",
                                "max_punct_ratio", "max_repeated_line_ratio", "max_top_word_ratio"},
                               what);
  read_opt(j, "min_chars", c.min_chars, what);
  read_opt(j, "max_chars", c.max_chars, what);
  read_opt(j, "min_arabic_ratio", c.min_arabic_ratio, what);
  read_opt(j, "max_digit_ratio", c.max_digit_ratio, what);
  read_opt(j, "max_punct_ratio", c.max_punct_ratio, what);
  read_opt(j, "max_repeated_line_ratio", c.max_repeated_line_ratio, what);
  read_opt(j, "max_top_word_ratio", c.max_top_word_ratio, what);
}

void to_json(nlohmann::json& j, const SourceStats& s) {
  j = {{"source", s.source ? nlohmann::json(std::string(to_string(*s.source))) : nlohmann::json(nullptr)},
       {"original_bytes", s.original_bytes},
       {"clean_bytes", s.clean_bytes},
       {"filtering_pct", s.original_bytes == 0 ? 0.0 : s.filtering_pct()}};
}

void from_json(const nlohmann::json& j, SourceStats& s) {
  const auto& src = j.at("source");
  if (src.is_null()) {
    s.source.reset();
  } else {
    s.source = parse_source(src.get<std::string>());
    if (!s.source) throw ValidationError("corpus stats: unknown source " + src.dump());
  }
  s.original_bytes = j.at("original_bytes").get<std::uint64_t>();
  s.clean_bytes = j.at("clean_bytes").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const CorpusStats& s) { j = {{"rows", s.rows}, {"total", s.total}}; }

void from_json(const nlohmann::json& j, CorpusStats& s) {
  s.rows = j.at("rows").get<std::vector<SourceStats>>();
  s.total = j.at("total").get<SourceStats>();
}

void to_json(nlohmann::json& j, const MinHashParams& p) {
  j = {{"k", p.k},
       {"bands", p.bands},
       {"rows", p.rows},
       {"shingle_n", p.shingle_n},
       {"jaccard_threshold", p.jaccard_threshold},
       {"seed", p.seed},
       {"exact_verify", p.exact_verify},
       {"granularity", p.granularity == DedupGranularity::paragraph ? "paragraph" : "document"}};
}

void from_json(const nlohmann::json& j, MinHashParams& p) {
  constexpr std::string_view what = "dedup config";
  json_io::reject_unknown_keys(
      j, {"k", "bands", "rows", "shingle_n", "jaccard_threshold", "seed", "exact_verify", "granularity"},
      what);
  read_opt(j, "k", p.k, what);
  read_opt(j, "bands", p.bands, what);
  read_opt(j, "rows", p.rows, what);
  read_opt(j, "shingle_n", p.shingle_n, what);
  read_opt(j, "jaccard_threshold", p.jaccard_threshold, what);
  read_opt(j, "seed", p.seed, what);
  read_opt(j, "exact_verify", p.exact_verify, what);
  std::string g = p.granularity == DedupGranularity::paragraph ? "paragraph" : "document";
  read_opt(j, "granularity", g, what);
  if (g == "document") {
    p.granularity = DedupGranularity::document;
  } else if (g == "paragraph") {
    p.granularity = DedupGranularity::paragraph;
  } else {
    throw ValidationError(fmt::format("{}: granularity must be document or paragraph, got `{}`", what, g));
  }
}

void to_json(nlohmann::json& j, const DedupReport& r) {
  j = {{"exact_dropped", r.exact_dropped},
       {"near_dropped", r.near_dropped},
       {"kept", r.kept},
       {"too_short", r.too_short}};
}

void from_json(const nlohmann::json& j, DedupReport& r) {
  r.exact_dropped = j.at("exact_dropped").get<std::uint64_t>();
  r.near_dropped = j.at("near_dropped").get<std::uint64_t>();
  r.kept = j.at("kept").get<std::uint64_t>();
  r.too_short = j.value("too_short", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const NoiseSpec& s) {
  j = {{"noise_density", s.noise_density}, {"mean_span_length", s.mean_span_length}, {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, NoiseSpec& s) {
  constexpr std::string_view what = "noise config";
  json_io::reject_unknown_keys(j, {"noise_density", "mean_span_length", "seed"}, what);
  read_opt(j, "noise_density", s.noise_density, what);
  read_opt(j, "mean_span_length", s.mean_span_length, what);
  read_opt(j, "seed", s.seed, what);
}

void to_json(nlohmann::json& j, const ExampleSidecar& s) {
  j = {{"format", "NAHRSC01"},
       {"noise", s.spec},
       {"seq_len", s.seq_len},
       {"target_len", s.target_len},
       {"vocab_size", s.vocab_size},
       {"num_sentinels", s.num_sentinels},
       {"examples", s.examples},
       {"tokens", s.tokens},
       {"corrupted_tokens", s.corrupted_tokens},
       {"files", s.files}};
}

void to_json(nlohmann::json& j, const TrainPlan& p) {
  j = {{"gpus", p.gpus},
       {"model_parallel", p.model_parallel},
       {"data_parallel", p.data_parallel},
       {"micro_batch", p.micro_batch},
       {"grad_accum", p.grad_accum},
       {"global_batch", p.global_batch}};
}

void to_json(nlohmann::json& j, const LrSchedule& s) {
  j = {{"init_lr", s.init_lr},
       {"warmup_steps", s.warmup_steps},
       {"warmup", s.warmup == WarmupShape::linear ? "linear" : "constant"}};
}

void to_json(nlohmann::json& j, const FinetuneConfig& c) {
  j = {{"learning_rate", c.learning_rate},
       {"batch_size", c.batch_size},
       {"scheduler", to_string(c.scheduler)},
       {"dropout", c.dropout},
       {"max_epochs", c.max_epochs}};
}

void to_json(nlohmann::json& j, const FewShotFold& f) {
  j = {{"requested_size", f.requested_size},
       {"seed", f.seed},
       {"example_ids", f.example_ids},
       {"augmented", f.augmented}};
}

}  // namespace nahr
