// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "json_io.hpp"
#include "nahr/error.hpp"
#include "nahr/hash.hpp"
#include "parallel.hpp"

#ifndef NAHR_VERSION
#define NAHR_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace nahr {

// -- config ----------------------------------------------------------------------------

namespace {

std::string_view to_string(InputFormat f) noexcept { return f == InputFormat::jsonl ? "jsonl" : "wet"; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

nlohmann::json config_json(const PipelineConfig& c, bool with_runtime) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : c.sources) {
    sources.push_back({{"path", s.path.string()}, {"format", to_string(s.format)}, {"source", to_string(s.source)}});
  }
  nlohmann::json j = {{"sources", sources},
                      {"filter", c.filter},
                      {"dedup", c.dedup},
                      {"tokenizer",
                       {{"target_size", c.tokenizer.training.target_size},
                        {"num_sentinels", c.tokenizer.training.num_sentinels},
                        {"sample_bytes", c.tokenizer.sample_bytes}}},
                      {"noise", c.noise},
                      {"seq_len", c.seq_len},
                      {"seed", c.seed},
                      {"shard_bytes", c.shard_bytes},
                      {"debug_jsonl", c.debug_jsonl}};
  if (with_runtime) {
    j["output_dir"] = c.output_dir.string();
    j["workers"] = c.workers;
  }
  return j;
}

}  // namespace

void PipelineConfig::validate() const {
  if (sources.empty()) throw ValidationError("config: `sources` is empty");
  for (const auto& s : sources) {
    if (!fs::is_regular_file(s.path)) throw ValidationError("config: source file not found: " + s.path.string());
  }
  filter.validate();
  dedup.validate();
  noise.validate();
  if (seq_len < kMinSeqLen) throw ValidationError(fmt::format("config: seq_len must be at least {}", kMinSeqLen));
  if (tokenizer.training.target_size <= SubwordVocab::kFixedSpecials + tokenizer.training.num_sentinels) {
    throw ValidationError("config: tokenizer target_size leaves no room for pieces");
  }
  if (tokenizer.sample_bytes == 0) throw ValidationError("config: tokenizer sample_bytes must be positive");
  if (shard_bytes < 4096) throw ValidationError("config: shard_bytes must be at least 4096");
  if (workers == 0) throw ValidationError("config: workers must be at least 1");
  if (output_dir.empty()) throw ValidationError("config: `output_dir` is required");
}

std::string PipelineConfig::hash() const { return digest_hex(config_json(*this, false).dump()); }

PipelineConfig pipeline_config_from_json(std::string_view json, const fs::path& base_dir) {
  const auto j = json_io::parse(json, "pipeline config");
  json_io::reject_unknown_keys(j,
                               {"sources", "filter", "dedup", "tokenizer", "noise", "seq_len", "output_dir",
                                "seed", "workers", "shard_bytes", "debug_jsonl"},
                               "pipeline config");
  PipelineConfig c;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    c.seq_len = j.value("seq_len", c.seq_len);
    c.workers = j.value("workers", c.workers);
    c.shard_bytes = j.value("shard_bytes", c.shard_bytes);
    c.debug_jsonl = j.value("debug_jsonl", false);
    if (j.contains("output_dir")) {
      fs::path out = j["output_dir"].get<std::string>();
      c.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("pipeline config: {}", e.what()));
  }
  if (!j.contains("sources") || !j["sources"].is_array()) {
    throw ValidationError("pipeline config: `sources` must be an array");
  }
  for (const auto& s : j["sources"]) {
    json_io::reject_unknown_keys(s, {"path", "format", "source"}, "source entry");
    if (!s.contains("path") || !s["path"].is_string()) throw ValidationError("source entry: `path` is required");
    SourceSpec spec;
    fs::path p = s["path"].get<std::string>();
    spec.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    const std::string fmt_name = lower(s.value("format", std::string("wet")));
    if (fmt_name == "wet") {
      spec.format = InputFormat::wet;
    } else if (fmt_name == "jsonl") {
      spec.format = InputFormat::jsonl;
    } else {
      throw ValidationError(fmt::format("source entry: unknown format `{}`", fmt_name));
    }
    const std::string tag = s.value("source", std::string("OTHER"));
    const auto src = parse_source(tag);
    if (!src) throw ValidationError(fmt::format("source entry: unknown source tag `{}`", tag));
    spec.source = *src;
    c.sources.push_back(std::move(spec));
  }
  if (j.contains("filter")) c.filter = j["filter"].get<FilterConfig>();
  c.dedup.seed = c.seed;
  if (j.contains("dedup")) j["dedup"].get_to(c.dedup);
  c.noise.seed = c.seed;
  if (j.contains("noise")) j["noise"].get_to(c.noise);
  if (j.contains("tokenizer")) {
    const auto& t = j["tokenizer"];
    json_io::reject_unknown_keys(t, {"target_size", "num_sentinels", "sample_bytes"}, "tokenizer config");
    try {
      c.tokenizer.training.target_size = t.value("target_size", c.tokenizer.training.target_size);
      c.tokenizer.training.num_sentinels = t.value("num_sentinels", c.tokenizer.training.num_sentinels);
      c.tokenizer.sample_bytes = t.value("sample_bytes", c.tokenizer.sample_bytes);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("tokenizer config: {}", e.what()));
    }
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  return pipeline_config_from_json(json_io::read_file(path), path.parent_path());
}

std::string to_json(const PipelineConfig& config) { return config_json(config, true).dump(2); }

// -- manifest --------------------------------------------------------------------------

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::filter: return "filter";
    case Stage::dedup: return "dedup";
    case Stage::tokenizer: return "tokenizer";
    case Stage::corrupt: return "corrupt";
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : kStages) {
    if (to_string(s) == name) return s;
  }
  if (name == "train-tokenizer") return Stage::tokenizer;
  return std::nullopt;
}

std::string_view to_string(StageStatus status) noexcept {
  switch (status) {
    case StageStatus::pending: return "pending";
    case StageStatus::running: return "running";
    case StageStatus::complete: return "complete";
    case StageStatus::failed: return "failed";
  }
  return "unknown";
}

bool RunManifest::complete() const {
  return std::all_of(stages.begin(), stages.end(),
                     [](const StageRecord& r) { return r.status == StageStatus::complete; });
}

namespace {

StageStatus parse_status(std::string_view s) {
  for (auto st : {StageStatus::pending, StageStatus::running, StageStatus::complete, StageStatus::failed}) {
    if (to_string(st) == s) return st;
  }
  throw ValidationError(fmt::format("manifest: unknown stage status `{}`", s));
}

nlohmann::json stage_json(const StageRecord& r) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& o : r.outputs) {
    outputs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"digest", o.digest}, {"records", o.records}});
  }
  return {{"name", to_string(r.stage)},
          {"status", to_string(r.status)},
          {"counts", r.counts},
          {"input_bytes", r.input_bytes},
          {"output_bytes", r.output_bytes},
          {"outputs", outputs},
          {"seconds", r.seconds},
          {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)}};
}

StageRecord stage_from_json(const nlohmann::json& j) {
  StageRecord r;
  const auto stage = parse_stage(j.at("name").get<std::string>());
  if (!stage) throw ValidationError("manifest: unknown stage " + j.at("name").dump());
  r.stage = *stage;
  r.status = parse_status(j.at("status").get<std::string>());
  r.counts = j.at("counts").get<std::map<std::string, std::uint64_t>>();
  r.input_bytes = j.at("input_bytes").get<std::uint64_t>();
  r.output_bytes = j.at("output_bytes").get<std::uint64_t>();
  for (const auto& o : j.at("outputs")) {
    r.outputs.push_back(OutputFile{o.at("path").get<std::string>(), o.at("bytes").get<std::uint64_t>(),
                                   o.at("digest").get<std::string>(), o.at("records").get<std::uint64_t>()});
  }
  r.seconds = j.at("seconds").get<double>();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

StageRecord blank_record(Stage s) {
  StageRecord r;
  r.stage = s;
  return r;
}

RunManifest fresh_manifest(const PipelineConfig& config) {
  RunManifest m;
  m.tool_version = NAHR_VERSION;
  m.config_hash = config.hash();
  m.seed = config.seed;
  m.algorithms = {{"doc_id", std::string(kFingerprintAlgorithm)},
                  {"file_digest", std::string(kFileDigestAlgorithm)},
                  {"normalization", "nfkc+layout"},
                  {"shingle_hash", "fnv1a64+splitmix64"},
                  {"tokenizer", "bpe"}};
  for (auto s : kStages) m.stages.push_back(blank_record(s));
  return m;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& r : m.stages) stages.push_back(stage_json(r));
  nlohmann::json j = {{"tool_version", m.tool_version},
                      {"config_hash", m.config_hash},
                      {"seed", m.seed},
                      {"algorithms", m.algorithms},
                      {"stages", stages},
                      {"corpus_stats", nullptr},
                      {"dedup_report", nullptr},
                      {"tokenizer_fingerprint", nullptr},
                      {"failed_stage", nullptr}};
  if (m.corpus_stats) j["corpus_stats"] = *m.corpus_stats;
  if (m.dedup_report) j["dedup_report"] = *m.dedup_report;
  if (m.tokenizer_fingerprint) j["tokenizer_fingerprint"] = *m.tokenizer_fingerprint;
  if (m.failed_stage) j["failed_stage"] = to_string(*m.failed_stage);
  return j.dump(2);
}

RunManifest manifest_from_json(std::string_view json) {
  const auto j = json_io::parse(json, "manifest");
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.algorithms = j.at("algorithms").get<std::map<std::string, std::string>>();
    for (const auto& s : j.at("stages")) m.stages.push_back(stage_from_json(s));
    if (!j.at("corpus_stats").is_null()) m.corpus_stats = j["corpus_stats"].get<CorpusStats>();
    if (!j.at("dedup_report").is_null()) m.dedup_report = j["dedup_report"].get<DedupReport>();
    if (!j.at("tokenizer_fingerprint").is_null()) {
      m.tokenizer_fingerprint = j["tokenizer_fingerprint"].get<std::string>();
    }
    if (!j.at("failed_stage").is_null()) m.failed_stage = parse_stage(j["failed_stage"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("manifest: {}", e.what()));
  }
  if (m.stages.size() != kStages.size()) throw ValidationError("manifest: wrong number of stages");
  for (std::size_t i = 0; i < kStages.size(); ++i) {
    if (m.stages[i].stage != kStages[i]) throw ValidationError("manifest: stages out of order");
  }
  return m;
}

RunManifest load_manifest(const fs::path& output_dir) {
  const auto path = output_dir / kManifestFile;
  if (!fs::is_regular_file(path)) throw ValidationError("no manifest in " + output_dir.string());
  return manifest_from_json(json_io::read_file(path));
}

RunManifest without_timings(RunManifest manifest) {
  for (auto& r : manifest.stages) r.seconds = 0.0;
  return manifest;
}

std::vector<std::string> check_conservation(const RunManifest& m) {
  std::vector<std::string> bad;
  const auto count = [](const StageRecord& r, const std::string& key) -> std::uint64_t {
    const auto it = r.counts.find(key);
    return it == r.counts.end() ? 0 : it->second;
  };
  const auto expect = [&](bool ok, std::string msg) {
    if (!ok) bad.push_back(std::move(msg));
  };
  const auto& in = m.stage(Stage::ingest);
  const auto& fl = m.stage(Stage::filter);
  const auto& dd = m.stage(Stage::dedup);
  const auto& co = m.stage(Stage::corrupt);
  if (in.status == StageStatus::complete) {
    expect(count(in, "records") == count(in, "documents") + count(in, "rejected"),
           "ingest: records != documents + rejected");
  }
  if (fl.status == StageStatus::complete) {
    expect(count(fl, "input") == count(fl, "kept") + count(fl, "dropped"), "filter: input != kept + dropped");
    std::uint64_t by_rule = 0;
    for (auto rule : kRuleOrder) by_rule += count(fl, "dropped." + std::string(to_string(rule)));
    expect(by_rule == count(fl, "dropped"), "filter: per-rule drops do not sum to dropped");
    expect(count(fl, "input") == count(in, "documents"), "filter input != ingest documents");
  }
  if (dd.status == StageStatus::complete) {
    expect(count(dd, "input") == count(dd, "kept") + count(dd, "exact_dropped") + count(dd, "near_dropped"),
           "dedup: input != kept + exact_dropped + near_dropped");
    expect(count(dd, "input") == count(fl, "kept"), "dedup input != filter kept");
    if (m.dedup_report) {
      expect(m.dedup_report->kept == count(dd, "kept") && m.dedup_report->exact_dropped == count(dd, "exact_dropped") &&
                 m.dedup_report->near_dropped == count(dd, "near_dropped"),
             "dedup report disagrees with stage counts");
    }
  }
  if (co.status == StageStatus::complete) {
    expect(count(co, "documents") == count(dd, "kept"), "corrupt documents != dedup kept");
    expect(count(co, "tokens") == count(co, "example_tokens") + count(co, "tokens_dropped"),
           "corrupt: tokens != example_tokens + tokens_dropped");
  }
  for (const auto& r : m.stages) {
    if (r.status != StageStatus::complete) continue;
    std::uint64_t bytes = 0;
    for (const auto& o : r.outputs) bytes += o.bytes;
    expect(bytes == r.output_bytes, fmt::format("{}: output_bytes does not match its files", to_string(r.stage)));
  }
  return bad;
}

bool verify_stage_outputs(const fs::path& output_dir, const StageRecord& record) {
  if (record.status != StageStatus::complete) return false;
  for (const auto& o : record.outputs) {
    const auto p = output_dir / o.path;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec) || fs::file_size(p, ec) != o.bytes || ec) return false;
    try {
      if (file_digest_hex(p) != o.digest) return false;
    } catch (const std::exception&) {
      return false;
    }
  }
  return true;
}

// -- document shards -------------------------------------------------------------------

std::string document_to_jsonl(const Document& doc) {
  nlohmann::json j = {{"id", doc.doc_id.hex()}, {"source", to_string(doc.source)}, {"text", doc.text}};
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

Document document_from_jsonl(std::string_view line) {
  const auto j = json_io::parse(line, "document shard");
  const auto src = parse_source(j.at("source").get<std::string>());
  if (!src) throw Error("document shard: unknown source");
  return document_from_normalized(j.at("text").get<std::string>(), *src);
}

namespace {

std::vector<std::string_view> split_lines(std::string_view data) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < data.size()) {
    auto nl = data.find('\n', pos);
    if (nl == std::string_view::npos) nl = data.size();
    if (nl > pos) lines.push_back(data.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::vector<Document> read_shard(const fs::path& path, unsigned workers) {
  const std::string data = json_io::read_file(path);
  const auto lines = split_lines(data);
  std::vector<Document> docs(lines.size());
  constexpr std::size_t kBlock = 512;
  const std::size_t blocks = (lines.size() + kBlock - 1) / kBlock;
  detail::parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t end = std::min(lines.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) docs[i] = document_from_jsonl(lines[i]);
  });
  return docs;
}

/// Rolls to a new numbered file once the current one reaches the byte limit.
class ShardWriter {
 public:
  ShardWriter(fs::path dir, std::string prefix, std::string extension, std::uint64_t limit)
      : dir_(std::move(dir)), prefix_(std::move(prefix)), extension_(std::move(extension)), limit_(limit) {}

  void write(std::string_view line) {
    if (!out_.is_open() || (bytes_ > 0 && bytes_ + line.size() + 1 > limit_)) roll();
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.put('\n');
    bytes_ += line.size() + 1;
    ++records_.back();
  }

  void close() {
    if (out_.is_open()) {
      out_.close();
      if (!out_) throw Error("failed writing " + names_.back());
    }
  }

  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<std::uint64_t>& records() const noexcept { return records_; }

 private:
  void roll() {
    close();
    names_.push_back(fmt::format("{}-{:05}{}", prefix_, names_.size(), extension_));
    records_.push_back(0);
    out_.open(dir_ / names_.back(), std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot create " + (dir_ / names_.back()).string());
    bytes_ = 0;
  }

  fs::path dir_;
  std::string prefix_, extension_;
  std::uint64_t limit_;
  std::ofstream out_;
  std::uint64_t bytes_ = 0;
  std::vector<std::string> names_;
  std::vector<std::uint64_t> records_;
};

}  // namespace

std::vector<Document> read_document_shard(const fs::path& path) { return read_shard(path, 1); }

// -- stages ----------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::string_view kDocShardExt = ".jsonl";

struct Runner {
  const PipelineConfig& config;
  fs::path out;
  RunManifest& manifest;
  const RunOptions& options;
  unsigned workers;

  void log(std::string_view msg) const {
    if (!options.quiet) std::cerr << "[nahr] " << msg << '\n';
  }

  void progress(Stage s, std::uint64_t n) const {
    if (options.progress) options.progress(s, n);
  }

  void save_manifest() const { json_io::write_file_atomic(out / kManifestFile, manifest_to_json(manifest)); }

  fs::path stage_dir(Stage s) const { return out / std::string(to_string(s)); }
  fs::path temp_dir(Stage s) const { return out / fmt::format(".{}.tmp", to_string(s)); }

  /// Document shards of a completed earlier stage, in order.
  std::vector<OutputFile> shards_of(Stage s, std::string_view prefix) const {
    std::vector<OutputFile> files;
    for (const auto& o : manifest.stage(s).outputs) {
      if (fs::path(o.path).filename().string().starts_with(prefix) && o.path.ends_with(kDocShardExt)) {
        files.push_back(o);
      }
    }
    return files;
  }

  void reset_from(Stage first) {
    for (auto s : kStages) {
      if (s < first) continue;
      std::error_code ec;
      fs::remove_all(stage_dir(s), ec);
      fs::remove_all(temp_dir(s), ec);
      manifest.stage(s) = blank_record(s);
      if (s <= Stage::dedup) {
        manifest.corpus_stats.reset();
        manifest.dedup_report.reset();
      }
      if (s <= Stage::tokenizer) manifest.tokenizer_fingerprint.reset();
    }
    manifest.failed_stage.reset();
  }

  template <class Fn>
  void run_stage(Stage s, Fn&& body) {
    auto& rec = manifest.stage(s);
    rec = blank_record(s);
    rec.status = StageStatus::running;
    save_manifest();
    log(fmt::format("{}: started", to_string(s)));
    const auto tmp = temp_dir(s);
    const auto start = Clock::now();
    const auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
    std::map<std::string, std::uint64_t> records;
    try {
      fs::remove_all(tmp);
      fs::create_directories(tmp);
      body(tmp, rec, records);

      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(tmp)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      rec.outputs.clear();
      rec.output_bytes = 0;
      const auto final_dir = stage_dir(s);
      for (const auto& f : files) {
        const auto rel = fs::relative(f, tmp).generic_string();
        OutputFile o;
        o.path = (fs::path(std::string(to_string(s))) / rel).generic_string();
        o.bytes = fs::file_size(f);
        o.digest = file_digest_hex(f);
        if (auto it = records.find(rel); it != records.end()) o.records = it->second;
        rec.output_bytes += o.bytes;
        rec.outputs.push_back(std::move(o));
      }
      fs::remove_all(final_dir);
      fs::rename(tmp, final_dir);
    } catch (const std::exception& e) {
      rec.status = StageStatus::failed;
      rec.error = e.what();
      rec.seconds = elapsed();
      manifest.failed_stage = s;
      std::error_code ec;
      fs::remove_all(tmp, ec);
      save_manifest();
      log(fmt::format("{}: failed: {}", to_string(s), e.what()));
      throw;
    }
    rec.status = StageStatus::complete;
    rec.seconds = elapsed();
    save_manifest();
    log(fmt::format("{}: complete in {:.1f}s", to_string(s), rec.seconds));
  }

  // ingest: sources -> normalized document shards

  struct SourceResult {
    std::uint64_t records = 0, documents = 0, rejected = 0, record_errors = 0, input_bytes = 0;
    std::array<std::uint64_t, 5> original{};
    std::array<bool, 5> seen{};
    std::vector<std::string> shards;
    std::vector<std::uint64_t> shard_records;
    std::uint64_t error_lines = 0;
  };

  SourceResult ingest_source(std::size_t index, const fs::path& dir) const {
    const auto& spec = config.sources[index];
    SourceResult r;
    r.input_bytes = fs::file_size(spec.path);
    ShardWriter shards(dir, fmt::format("docs-{:03}", index), std::string(kDocShardExt), config.shard_bytes);
    std::ofstream errors;
    const auto error_name = fmt::format("errors-{:03}.jsonl", index);

    const auto handle = [&](ReadResult&& result) {
      if (auto* err = std::get_if<RecordError>(&result)) {
        ++r.record_errors;
        if (!errors.is_open()) errors.open(dir / error_name, std::ios::binary);
        errors << nlohmann::json{{"source", spec.path.filename().string()},
                                 {"offset", err->offset},
                                 {"error", err->message}}
                      .dump()
               << '\n';
        ++r.error_lines;
        return;
      }
      auto& rec = std::get<RawRecord>(result);
      ++r.records;
      const Source source = rec.source_hint.value_or(spec.source);
      r.original[static_cast<std::size_t>(source)] += rec.payload.size();
      r.seen[static_cast<std::size_t>(source)] = true;
      try {
        const auto doc = to_document(rec, source);
        ++r.documents;
        shards.write(document_to_jsonl(doc));
      } catch (const DocumentRejected&) {
        ++r.rejected;
      }
    };
    if (spec.format == InputFormat::wet) {
      auto reader = WetReader::open(spec.path);
      while (auto res = reader.next()) handle(std::move(*res));
    } else {
      auto reader = JsonlReader::open(spec.path);
      while (auto res = reader.next()) handle(std::move(*res));
    }
    shards.close();
    if (errors.is_open()) errors.close();
    r.shards = shards.names();
    r.shard_records = shards.records();
    return r;
  }

  void ingest(const fs::path& dir, StageRecord& rec, std::map<std::string, std::uint64_t>& records) {
    std::vector<SourceResult> results(config.sources.size());
    detail::parallel_for(results.size(), workers, [&](std::size_t i) { results[i] = ingest_source(i, dir); });
    std::array<std::uint64_t, 5> original{};
    std::array<bool, 5> seen{};
    auto& c = rec.counts;
    c = {{"records", 0}, {"documents", 0}, {"rejected", 0}, {"record_errors", 0}};
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      c["records"] += r.records;
      c["documents"] += r.documents;
      c["rejected"] += r.rejected;
      c["record_errors"] += r.record_errors;
      rec.input_bytes += r.input_bytes;
      for (std::size_t k = 0; k < original.size(); ++k) {
        original[k] += r.original[k];
        seen[k] = seen[k] || r.seen[k];
      }
      for (std::size_t k = 0; k < r.shards.size(); ++k) records[r.shards[k]] = r.shard_records[k];
      if (r.error_lines > 0) records[fmt::format("errors-{:03}.jsonl", i)] = r.error_lines;
    }
    for (auto s : kAllSources) {
      if (seen[static_cast<std::size_t>(s)]) c[fmt::format("original_bytes.{}", to_string(s))] = original[static_cast<std::size_t>(s)];
    }
    progress(Stage::ingest, c["documents"]);
  }

  // filter: one verdict line per ingested document

  void filter(const fs::path& dir, StageRecord& rec, std::map<std::string, std::uint64_t>& records) {
    const auto shards = shards_of(Stage::ingest, "docs-");
    struct ShardResult {
      std::uint64_t input = 0, kept = 0, kept_bytes = 0, input_bytes = 0;
      std::array<std::uint64_t, std::size(kRuleOrder)> by_rule{};
    };
    std::vector<ShardResult> results(shards.size());
    const unsigned inner = shards.size() >= workers ? 1 : workers;
    detail::parallel_for(shards.size(), workers, [&](std::size_t i) {
      auto& r = results[i];
      r.input_bytes = shards[i].bytes;
      const auto docs = read_shard(out / shards[i].path, inner);
      std::string lines;
      for (const auto& doc : docs) {
        const auto d = apply_filters(doc, config.filter);
        ++r.input;
        if (d.verdict == Verdict::keep) {
          ++r.kept;
          r.kept_bytes += doc.byte_size();
          lines += "+\n";
        } else {
          const auto rule = *d.failed_rule;
          ++r.by_rule[static_cast<std::size_t>(
              std::find(std::begin(kRuleOrder), std::end(kRuleOrder), rule) - std::begin(kRuleOrder))];
          lines += fmt::format("-{}\n", to_string(rule));
        }
      }
      std::ofstream(dir / (fs::path(shards[i].path).stem().string() + ".verdicts"), std::ios::binary) << lines;
    });
    auto& c = rec.counts;
    c = {{"input", 0}, {"kept", 0}, {"dropped", 0}, {"kept_bytes", 0}};
    for (auto rule : kRuleOrder) c[fmt::format("dropped.{}", to_string(rule))] = 0;
    for (std::size_t i = 0; i < shards.size(); ++i) {
      const auto& r = results[i];
      c["input"] += r.input;
      c["kept"] += r.kept;
      c["dropped"] += r.input - r.kept;
      c["kept_bytes"] += r.kept_bytes;
      rec.input_bytes += r.input_bytes;
      for (std::size_t k = 0; k < r.by_rule.size(); ++k) {
        c[fmt::format("dropped.{}", to_string(kRuleOrder[k]))] += r.by_rule[k];
      }
      records[fs::path(shards[i].path).stem().string() + ".verdicts"] = r.input;
    }
    progress(Stage::filter, c["input"]);
  }

  // dedup: filter survivors in stream order -> clean shards + index

  void dedup(const fs::path& dir, StageRecord& rec, std::map<std::string, std::uint64_t>& records) {
    const auto shards = shards_of(Stage::ingest, "docs-");
    Deduplicator dedup(config.dedup);
    ShardWriter clean(dir, "clean", std::string(kDocShardExt), config.shard_bytes);
    std::ofstream dropped(dir / "dropped.jsonl", std::ios::binary);
    std::uint64_t dropped_lines = 0, offered = 0, ingest_ordinal = 0;
    std::array<std::uint64_t, 5> clean_bytes{};
    const bool precompute = config.dedup.granularity == DedupGranularity::document;
    auto& c = rec.counts;
    c = {{"input", 0}, {"kept", 0}, {"exact_dropped", 0}, {"near_dropped", 0}, {"too_short", 0}};

    for (const auto& shard : shards) {
      rec.input_bytes += shard.bytes;
      auto docs = read_shard(out / shard.path, workers);
      const auto verdict_path =
          out / std::string(to_string(Stage::filter)) / (fs::path(shard.path).stem().string() + ".verdicts");
      const std::string verdict_text = json_io::read_file(verdict_path);
      const auto verdicts = split_lines(verdict_text);
      if (verdicts.size() != docs.size()) throw Error("filter verdicts do not match " + shard.path);
      std::vector<Document> survivors;
      std::vector<std::uint64_t> ordinals;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        if (verdicts[i] == "+") {
          survivors.push_back(std::move(docs[i]));
          ordinals.push_back(ingest_ordinal + i);
        }
      }
      ingest_ordinal += docs.size();
      docs.clear();

      constexpr std::size_t kBatch = 1024;
      std::vector<std::optional<MinHashSignature>> sigs;
      for (std::size_t begin = 0; begin < survivors.size(); begin += kBatch) {
        const std::size_t end = std::min(survivors.size(), begin + kBatch);
        sigs.assign(end - begin, std::nullopt);
        if (precompute) {
          detail::parallel_for(end - begin, workers, [&](std::size_t i) {
            try {
              sigs[i] = dedup.hasher().signature(survivors[begin + i].text);
            } catch (const TooShortToShingle&) {
            }
          });
        }
        for (std::size_t i = begin; i < end; ++i) {
          auto& doc = survivors[i];
          const auto original_id = doc.doc_id;
          const auto d = dedup.offer(doc, std::move(sigs[i - begin]));
          if (d.outcome == DedupOutcome::kept) {
            clean_bytes[static_cast<std::size_t>(doc.source)] += doc.byte_size();
            clean.write(document_to_jsonl(doc));
          } else {
            nlohmann::json line = {
                {"ordinal", ordinals[i]},
                {"id", original_id.hex()},
                {"outcome", d.outcome == DedupOutcome::exact_duplicate ? "exact" : "near"},
                {"witness", d.witness ? nlohmann::json(d.witness->hex()) : nlohmann::json(nullptr)},
                {"similarity", d.similarity}};
            dropped << line.dump() << '\n';
            ++dropped_lines;
          }
          ++offered;
        }
        const auto& report = dedup.report();
        c["input"] = offered;
        c["kept"] = report.kept;
        c["exact_dropped"] = report.exact_dropped;
        c["near_dropped"] = report.near_dropped;
        c["too_short"] = report.too_short;
        progress(Stage::dedup, offered);
      }
    }
    clean.close();
    dropped.close();
    if (!dropped) throw Error("failed writing dropped.jsonl");
    dedup.index().save(dir / "index");

    for (std::size_t k = 0; k < clean.names().size(); ++k) records[clean.names()[k]] = clean.records()[k];
    records["dropped.jsonl"] = dropped_lines;
    manifest.dedup_report = dedup.report();

    const auto& ingest_counts = manifest.stage(Stage::ingest).counts;
    std::vector<SourceStats> rows;
    for (auto s : kAllSources) {
      const auto it = ingest_counts.find(fmt::format("original_bytes.{}", to_string(s)));
      const auto clean_b = clean_bytes[static_cast<std::size_t>(s)];
      c[fmt::format("clean_bytes.{}", to_string(s))] = clean_b;
      if (it == ingest_counts.end() || it->second == 0) {
        if (clean_b > 0) throw Error(fmt::format("clean bytes for {} without original bytes", to_string(s)));
        c.erase(fmt::format("clean_bytes.{}", to_string(s)));
        continue;
      }
      rows.push_back(SourceStats{s, it->second, clean_b});
    }
    if (!rows.empty()) manifest.corpus_stats = make_corpus_stats(rows);
  }

  // tokenizer: train on a prefix of the clean stream

  void tokenizer(const fs::path& dir, StageRecord& rec, std::map<std::string, std::uint64_t>& records) {
    VocabTrainer trainer(config.tokenizer.training);
    std::uint64_t bytes = 0, docs = 0;
    for (const auto& shard : shards_of(Stage::dedup, "clean-")) {
      if (bytes >= config.tokenizer.sample_bytes) break;
      rec.input_bytes += shard.bytes;
      for (const auto& doc : read_shard(out / shard.path, workers)) {
        if (bytes >= config.tokenizer.sample_bytes) break;
        trainer.add_text(doc.text);
        bytes += doc.byte_size();
        ++docs;
      }
    }
    if (docs == 0) throw Error("no clean documents to train the tokenizer on");
    const auto trained = trainer.train();
    trained.vocab.save(dir / "vocab.txt");
    records["vocab.txt"] = trained.vocab.size();
    rec.counts = {{"sample_documents", docs},
                  {"sample_bytes", bytes},
                  {"vocab_size", trained.vocab.size()},
                  {"pieces", trained.vocab.pieces().size()},
                  {"merges", trained.merges.size()}};
    manifest.tokenizer_fingerprint = trained.vocab.fingerprint().hex();
    progress(Stage::tokenizer, docs);
  }

  // corrupt: clean shards -> span-corruption example files

  void corrupt(const fs::path& dir, StageRecord& rec, std::map<std::string, std::uint64_t>& records) {
    const auto vocab = SubwordVocab::load(stage_dir(Stage::tokenizer) / "vocab.txt");
    if (manifest.tokenizer_fingerprint && vocab.fingerprint().hex() != *manifest.tokenizer_fingerprint) {
      throw Error("tokenizer vocabulary does not match the recorded fingerprint");
    }
    const auto special = vocab.special_tokens();
    const auto shards = shards_of(Stage::dedup, "clean-");
    std::vector<std::uint64_t> first_doc(shards.size(), 0);
    for (std::size_t i = 1; i < shards.size(); ++i) first_doc[i] = first_doc[i - 1] + shards[i - 1].records;

    struct ShardResult {
      std::uint64_t documents = 0, examples = 0, tokens = 0, example_tokens = 0, corrupted = 0, bytes_in = 0;
      std::string name;
    };
    std::vector<ShardResult> results(shards.size());
    detail::parallel_for(shards.size(), workers, [&](std::size_t i) {
      auto& r = results[i];
      r.bytes_in = shards[i].bytes;
      r.name = fmt::format("examples-{:05}.bin", i);
      std::optional<fs::path> debug;
      if (config.debug_jsonl) debug = dir / fmt::format("examples-{:05}.debug.jsonl", i);
      ExampleWriter writer(dir / r.name, debug);
      Encoder encoder(vocab);
      TokenSequence tokens;
      std::uint64_t ordinal = first_doc[i];
      for (const auto& doc : read_shard(out / shards[i].path, 1)) {
        tokens.clear();
        encoder.encode_append(doc.text, tokens);
        r.tokens += tokens.size();
        const auto chunks = chunk_for_packing(tokens, config.seq_len);
        for (std::size_t k = 0; k < chunks.size(); ++k) {
          const auto ex = nahr::corrupt(chunks[k], config.noise, special, (ordinal << 20) | k);
          r.example_tokens += chunks[k].size();
          r.corrupted += corruption_counts(chunks[k].size(), config.noise).corrupted;
          writer.write(ex.input_ids, ex.target_ids);
          ++r.examples;
        }
        ++r.documents;
        ++ordinal;
      }
      writer.close();
    });

    ExampleSidecar sidecar;
    sidecar.spec = config.noise;
    sidecar.seq_len = config.seq_len;
    sidecar.target_len = static_cast<std::uint32_t>(max_target_length(config.seq_len, config.noise));
    sidecar.vocab_size = vocab.size();
    sidecar.num_sentinels = vocab.num_sentinels();
    auto& c = rec.counts;
    c = {{"documents", 0}, {"examples", 0}, {"tokens", 0}, {"example_tokens", 0}, {"tokens_dropped", 0},
         {"corrupted_tokens", 0}};
    for (const auto& r : results) {
      c["documents"] += r.documents;
      c["examples"] += r.examples;
      c["tokens"] += r.tokens;
      c["example_tokens"] += r.example_tokens;
      c["tokens_dropped"] += r.tokens - r.example_tokens;
      c["corrupted_tokens"] += r.corrupted;
      rec.input_bytes += r.bytes_in;
      records[r.name] = r.examples;
      sidecar.files.push_back(r.name);
    }
    sidecar.examples = c["examples"];
    sidecar.tokens = c["example_tokens"];
    sidecar.corrupted_tokens = c["corrupted_tokens"];
    json_io::write_file_atomic(dir / "examples.json", sidecar_to_json(sidecar));
    progress(Stage::corrupt, c["documents"]);
  }

  void run_from(Stage first) {
    reset_from(first);
    save_manifest();
    for (auto s : kStages) {
      if (s < first) continue;
      if (options.stop_after && s > *options.stop_after) break;
      switch (s) {
        case Stage::ingest:
          run_stage(s, [&](auto& d, auto& r, auto& n) { ingest(d, r, n); });
          break;
        case Stage::filter:
          run_stage(s, [&](auto& d, auto& r, auto& n) { filter(d, r, n); });
          break;
        case Stage::dedup:
          run_stage(s, [&](auto& d, auto& r, auto& n) { dedup(d, r, n); });
          break;
        case Stage::tokenizer:
          run_stage(s, [&](auto& d, auto& r, auto& n) { tokenizer(d, r, n); });
          break;
        case Stage::corrupt:
          run_stage(s, [&](auto& d, auto& r, auto& n) { corrupt(d, r, n); });
          break;
      }
    }
  }
};

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  std::error_code ec;
  fs::remove(out / kManifestFile, ec);
  json_io::write_file_atomic(out / kConfigFile, to_json(config));
  RunManifest manifest = fresh_manifest(config);
  Runner runner{config, out, manifest, options, config.workers};
  runner.run_from(Stage::ingest);
  return manifest;
}

RunManifest resume(const fs::path& output_dir, const std::optional<PipelineConfig>& config,
                   const RunOptions& options) {
  RunManifest manifest = load_manifest(output_dir);
  const auto config_path = output_dir / kConfigFile;
  if (!fs::is_regular_file(config_path)) throw ValidationError("no recorded config in " + output_dir.string());
  PipelineConfig recorded = pipeline_config_from_json(json_io::read_file(config_path));
  if (recorded.hash() != manifest.config_hash) {
    throw ValidationError("recorded config does not match the manifest's config hash");
  }
  if (config && config->hash() != manifest.config_hash) {
    throw ValidationError(fmt::format("refusing to resume: config hash {} differs from the recorded {}",
                                      config->hash(), manifest.config_hash));
  }
  PipelineConfig effective = config ? *config : recorded;
  effective.output_dir = output_dir;
  effective.validate();

  const Stage last = options.stop_after.value_or(Stage::corrupt);
  std::optional<Stage> first_stale;
  for (auto s : kStages) {
    if (s > last) break;
    if (!verify_stage_outputs(output_dir, manifest.stage(s))) {
      first_stale = s;
      break;
    }
  }
  if (!first_stale) return manifest;
  Runner runner{effective, output_dir, manifest, options, effective.workers};
  runner.run_from(*first_stale);
  return manifest;
}

// -- report ----------------------------------------------------------------------------

RenderedReport emit_report(const RunManifest& manifest) {
  std::ostringstream text;
  nlohmann::json table = nlohmann::json::array();
  if (manifest.corpus_stats) {
    text << render_stats_table(*manifest.corpus_stats) << '\n';
    const auto row_json = [](const SourceStats& r) {
      return nlohmann::json{{"source", r.source ? nlohmann::json(std::string(to_string(*r.source))) : nlohmann::json("Total")},
                            {"original", format_size(r.original_bytes)},
                            {"clean", format_size(r.clean_bytes)},
                            {"filtering_pct", rounded_pct(r.filtering_pct())}};
    };
    for (const auto& r : manifest.corpus_stats->rows) table.push_back(row_json(r));
    table.push_back(row_json(manifest.corpus_stats->total));
  } else {
    text << "corpus statistics: not available\n\n";
  }
  text << fmt::format("{:<10} {:<9} {:>10}  {}\n", "stage", "status", "seconds", "counts");
  nlohmann::json timings = nlohmann::json::object();
  for (const auto& r : manifest.stages) {
    std::string counts;
    for (const auto& [k, v] : r.counts) {
      if (k.find('.') != std::string::npos) continue;
      if (!counts.empty()) counts += ' ';
      counts += fmt::format("{}={}", k, v);
    }
    text << fmt::format("{:<10} {:<9} {:>10.2f}  {}\n", to_string(r.stage), to_string(r.status), r.seconds, counts);
    timings[std::string(to_string(r.stage))] = r.seconds;
  }
  if (manifest.failed_stage) text << fmt::format("failed stage: {}\n", to_string(*manifest.failed_stage));
  if (manifest.tokenizer_fingerprint) text << fmt::format("tokenizer: {}\n", *manifest.tokenizer_fingerprint);
  text << fmt::format("config: {}\n", manifest.config_hash);

  nlohmann::json j = {{"manifest", json_io::parse(manifest_to_json(manifest), "manifest")},
                      {"corpus_table", table},
                      {"timings", timings}};
  return RenderedReport{text.str(), j.dump(2)};
}

}  // namespace nahr
