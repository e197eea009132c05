// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nahr/dedup.hpp"
#include "nahr/filter.hpp"
#include "nahr/ingest.hpp"
#include "nahr/span_corruption.hpp"
#include "nahr/tokenizer.hpp"

namespace nahr {

enum class InputFormat : std::uint8_t { wet, jsonl };

struct SourceSpec {
  std::filesystem::path path;
  InputFormat format = InputFormat::wet;
  Source source = Source::other;

  bool operator==(const SourceSpec&) const = default;
};

struct TokenizerStageConfig {
  TokenizerTrainingConfig training;
  /// Clean text (in stream order) fed to the trainer.
  std::uint64_t sample_bytes = 32ULL << 20;
};

struct PipelineConfig {
  std::vector<SourceSpec> sources;
  FilterConfig filter;
  MinHashParams dedup;
  TokenizerStageConfig tokenizer;
  NoiseSpec noise;
  std::uint32_t seq_len = 512;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t shard_bytes = 256ULL << 20;
  bool debug_jsonl = false;

  /// Throws ValidationError: no sources, a missing input path, bad sub-configs.
  void validate() const;

  /// Digest of every field that affects outputs (workers excluded).
  std::string hash() const;
};

/// Parses a config document. Sub-objects may omit `seed`; they then inherit
/// the top-level seed. Relative source paths resolve against `base_dir`.
PipelineConfig pipeline_config_from_json(std::string_view json, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string to_json(const PipelineConfig& config);

enum class Stage : std::uint8_t { ingest, filter, dedup, tokenizer, corrupt };

inline constexpr std::array<Stage, 5> kStages = {Stage::ingest, Stage::filter, Stage::dedup,
                                                 Stage::tokenizer, Stage::corrupt};

std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view name);

enum class StageStatus : std::uint8_t { pending, running, complete, failed };

std::string_view to_string(StageStatus status) noexcept;

struct OutputFile {
  std::string path;  // relative to the output directory
  std::uint64_t bytes = 0;
  std::string digest;
  std::uint64_t records = 0;

  bool operator==(const OutputFile&) const = default;
};

struct StageRecord {
  Stage stage = Stage::ingest;
  StageStatus status = StageStatus::pending;
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t input_bytes = 0;
  std::uint64_t output_bytes = 0;
  std::vector<OutputFile> outputs;
  double seconds = 0.0;
  std::optional<std::string> error;

  bool operator==(const StageRecord&) const = default;
};

struct RunManifest {
  std::string tool_version;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> algorithms;
  std::vector<StageRecord> stages;  // one per Stage, in order
  std::optional<CorpusStats> corpus_stats;
  std::optional<DedupReport> dedup_report;
  std::optional<std::string> tokenizer_fingerprint;
  std::optional<Stage> failed_stage;

  StageRecord& stage(Stage s) { return stages[static_cast<std::size_t>(s)]; }
  const StageRecord& stage(Stage s) const { return stages[static_cast<std::size_t>(s)]; }
  bool complete() const;

  bool operator==(const RunManifest&) const = default;
};

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kConfigFile = "config.json";

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view json);
RunManifest load_manifest(const std::filesystem::path& output_dir);

/// Manifest with every wall-clock field zeroed, for run-to-run comparison.
RunManifest without_timings(RunManifest manifest);

/// Conservation violations (empty when the manifest is consistent).
std::vector<std::string> check_conservation(const RunManifest& manifest);

/// Re-hashes the outputs of a completed stage; false on any mismatch or missing file.
bool verify_stage_outputs(const std::filesystem::path& output_dir, const StageRecord& record);

struct RunOptions {
  /// Last stage to run; later stages stay pending.
  std::optional<Stage> stop_after;
  /// Called by long stages with a monotone unit count (documents or files).
  std::function<void(Stage, std::uint64_t)> progress;
  bool quiet = false;
};

/// Runs every stage from scratch into config.output_dir, replacing earlier
/// stage outputs there. On a stage failure the manifest records the stage and
/// its partial counts and the error is rethrown.
RunManifest run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Continues a previous run. Stages whose recorded outputs still verify are
/// skipped; the first one that does not, and every later stage, is rerun.
/// With `config`, refuses (ValidationError) when its hash differs from the
/// recorded one.
RunManifest resume(const std::filesystem::path& output_dir,
                   const std::optional<PipelineConfig>& config = std::nullopt,
                   const RunOptions& options = {});

struct RenderedReport {
  std::string text;
  std::string json;
};

RenderedReport emit_report(const RunManifest& manifest);

// -- clean document shards --------------------------------------------------------------

/// One JSON object per line: {"id", "source", "text"}.
std::string document_to_jsonl(const Document& doc);
Document document_from_jsonl(std::string_view line);
std::vector<Document> read_document_shard(const std::filesystem::path& path);

}  // namespace nahr
