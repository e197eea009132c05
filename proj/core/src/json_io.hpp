// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "nahr/dedup.hpp"
#include "nahr/evaluation.hpp"
#include "nahr/filter.hpp"
#include "nahr/span_corruption.hpp"
#include "nahr/train_plan.hpp"

namespace nahr::json_io {

/// Parses `text`, rethrowing syntax errors as ValidationError prefixed with `what`.
nlohmann::json parse(std::string_view text, std::string_view what);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, fsyncs and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Throws ValidationError for any key of `obj` not in `known`.
void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> known,
                         std::string_view what);

}  // namespace nahr::json_io

namespace nahr {

void to_json(nlohmann::json& j, const FilterConfig& c);
void from_json(const nlohmann::json& j, FilterConfig& c);

void to_json(nlohmann::json& j, const SourceStats& s);
void from_json(const nlohmann::json& j, SourceStats& s);
void to_json(nlohmann::json& j, const CorpusStats& s);
void from_json(const nlohmann::json& j, CorpusStats& s);

void to_json(nlohmann::json& j, const MinHashParams& p);
void from_json(const nlohmann::json& j, MinHashParams& p);
void to_json(nlohmann::json& j, const DedupReport& r);
void from_json(const nlohmann::json& j, DedupReport& r);

void to_json(nlohmann::json& j, const NoiseSpec& s);
void from_json(const nlohmann::json& j, NoiseSpec& s);
void to_json(nlohmann::json& j, const ExampleSidecar& s);

void to_json(nlohmann::json& j, const TrainPlan& p);
void to_json(nlohmann::json& j, const LrSchedule& s);
void to_json(nlohmann::json& j, const FinetuneConfig& c);

void to_json(nlohmann::json& j, const FewShotFold& f);

}  // namespace nahr
