// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "nahr/error.hpp"
#include "nahr/evaluation.hpp"
#include "nahr/filter.hpp"
#include "nahr/pipeline.hpp"
#include "nahr/train_plan.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string output;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "pipeline config (JSON)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--output", c.output, "output directory");
  cmd->add_flag("-q,--quiet", c.quiet, "no progress on stderr");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw nahr::ValidationError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nahr::PipelineConfig load_config(const Common& c) {
  const fs::path path = c.config;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw nahr::ValidationError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  if (!j.is_object()) throw nahr::ValidationError(path.string() + ": expected a JSON object");
  if (c.seed) j["seed"] = *c.seed;
  if (c.workers) j["workers"] = *c.workers;
  if (!c.output.empty()) j["output_dir"] = fs::absolute(c.output).string();
  auto config = nahr::pipeline_config_from_json(j.dump(), path.parent_path());
  config.validate();
  return config;
}

nahr::RunOptions run_options(const Common& c, std::optional<nahr::Stage> stop_after) {
  nahr::RunOptions o;
  o.stop_after = stop_after;
  o.quiet = c.quiet;
  return o;
}

void print_failures(const nahr::RunManifest& m) {
  for (const auto& v : nahr::check_conservation(m)) std::cerr << "[nahr] conservation: " << v << '\n';
}

// Runs through `stage`, reusing verified earlier stages of the same config.
int run_through(const Common& c, nahr::Stage stage) {
  const auto config = load_config(c);
  const auto manifest_path = config.output_dir / nahr::kManifestFile;
  nahr::RunManifest m;
  bool resumed = false;
  if (fs::is_regular_file(manifest_path)) {
    const auto prior = nahr::load_manifest(config.output_dir);
    if (prior.config_hash == config.hash()) {
      m = nahr::resume(config.output_dir, config, run_options(c, stage));
      resumed = true;
    }
  }
  if (!resumed) m = nahr::run_pipeline(config, run_options(c, stage));
  print_failures(m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nahr: Arabic pretraining corpus pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(NAHR_TOOL_VERSION));

  Common common;
  std::map<std::string, nahr::Stage> stage_cmds = {{"ingest", nahr::Stage::ingest},
                                                   {"filter", nahr::Stage::filter},
                                                   {"dedup", nahr::Stage::dedup},
                                                   {"train-tokenizer", nahr::Stage::tokenizer},
                                                   {"corrupt", nahr::Stage::corrupt}};
  std::map<std::string, CLI::App*> stage_apps;
  for (const auto& [name, stage] : stage_cmds) {
    auto* cmd = app.add_subcommand(name, fmt::format("run the pipeline through the {} stage", name));
    add_common(cmd, common, true);
    stage_apps[name] = cmd;
  }

  auto* run = app.add_subcommand("run", "run every stage from scratch");
  add_common(run, common, true);

  auto* resume_cmd = app.add_subcommand("resume", "continue a previous run");
  add_common(resume_cmd, common, false);
  resume_cmd->get_option("--output")->required();

  auto* report = app.add_subcommand("report", "render a run report or a corpus stats file");
  std::string report_format = "text";
  std::string stats_file;
  report->add_option("--output", common.output, "run directory");
  report->add_option("--stats", stats_file, "corpus stats JSON instead of a run directory")
      ->check(CLI::ExistingFile);
  report->add_option("--format", report_format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* eval = app.add_subcommand("eval", "score predictions or average ALUE task scores");
  std::string task, predictions, alue_file;
  eval->add_option("--task", task, "task or metric name (MQ2Q, ..., TS, QG, QA, rouge, bleu, ...)");
  eval->add_option("--predictions", predictions, "predictions JSONL")->check(CLI::ExistingFile);
  eval->add_option("--alue", alue_file, "model scores JSON")->check(CLI::ExistingFile);
  eval->add_option("--output", common.output, "write the JSON report here");

  auto* fewshot = app.add_subcommand("fewshot", "sample class-covering few-shot folds");
  std::string dataset;
  std::uint32_t size = 0, folds = 5;
  std::uint64_t fs_seed = 0;
  fewshot->add_option("--dataset", dataset, "labeled JSONL (id, label)")->required()->check(CLI::ExistingFile);
  fewshot->add_option("--size", size, "8, 16, 32, 64, 128 or 256")->required();
  fewshot->add_option("--folds", folds, "number of folds")->check(CLI::PositiveNumber);
  fewshot->add_option("--seed", fs_seed, "first fold seed");
  fewshot->add_option("--output", common.output, "write folds JSON here");

  auto* plan = app.add_subcommand("plan", "parallelism plan, learning-rate schedule and fine-tuning grid");
  std::uint64_t gpus = 128, model_parallel = 4, micro_batch = 32, global_batch = 4096;
  double init_lr = 0.005;
  std::uint64_t warmup = 10000;
  std::string warmup_shape = "constant";
  std::vector<std::int64_t> steps;
  bool grid = false;
  plan->add_option("--gpus", gpus);
  plan->add_option("--model-parallel", model_parallel);
  plan->add_option("--micro-batch", micro_batch);
  plan->add_option("--global-batch", global_batch);
  plan->add_option("--init-lr", init_lr);
  plan->add_option("--warmup-steps", warmup);
  plan->add_option("--warmup-shape", warmup_shape)->check(CLI::IsMember({"constant", "linear"}));
  plan->add_option("--lr-at", steps, "print the learning rate at these steps");
  plan->add_flag("--grid", grid, "print the fine-tuning hyperparameter grid");
  plan->add_option("--output", common.output, "write the JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const auto emit = [&](const std::string& text) {
    if (common.output.empty()) {
      std::cout << text << '\n';
    } else {
      std::ofstream out(common.output, std::ios::binary);
      out << text << '\n';
      if (!out) throw nahr::Error("cannot write " + common.output);
    }
  };

  try {
    for (const auto& [name, cmd] : stage_apps) {
      if (cmd->parsed()) return run_through(common, stage_cmds[name]);
    }
    if (run->parsed()) {
      const auto m = nahr::run_pipeline(load_config(common), run_options(common, std::nullopt));
      print_failures(m);
      return 0;
    }
    if (resume_cmd->parsed()) {
      std::optional<nahr::PipelineConfig> config;
      if (!common.config.empty()) config = load_config(common);
      auto opts = run_options(common, std::nullopt);
      const auto m = nahr::resume(common.output, config, opts);
      print_failures(m);
      return 0;
    }
    if (report->parsed()) {
      if (!stats_file.empty()) {
        const auto stats = nahr::stats_from_json(slurp(stats_file));
        std::cout << (report_format == "json" ? nahr::stats_to_json(stats) : nahr::render_stats_table(stats))
                  << '\n';
        return 0;
      }
      if (common.output.empty()) throw nahr::ValidationError("report needs --output or --stats");
      const auto rendered = nahr::emit_report(nahr::load_manifest(common.output));
      std::cout << (report_format == "json" ? rendered.json : rendered.text) << '\n';
      return 0;
    }
    if (eval->parsed()) {
      if (!alue_file.empty()) {
        const auto [table, json] = nahr::alue_report_from_file(alue_file);
        std::cerr << table;
        emit(json);
        return 0;
      }
      if (task.empty() || predictions.empty()) {
        throw nahr::ValidationError("eval needs --task and --predictions, or --alue");
      }
      emit(nahr::evaluate_predictions_file(task, predictions));
      return 0;
    }
    if (fewshot->parsed()) {
      const auto data = nahr::read_labeled_jsonl(dataset);
      const auto sampled = nahr::sample_folds(data, size, fs_seed, folds);
      emit(nahr::folds_to_json(sampled));
      return 0;
    }
    if (plan->parsed()) {
      const auto p = nahr::plan_parallelism(gpus, model_parallel, micro_batch, global_batch);
      nahr::LrSchedule schedule{init_lr, warmup,
                                warmup_shape == "linear" ? nahr::WarmupShape::linear : nahr::WarmupShape::constant};
      auto j = nlohmann::json::parse(nahr::plan_to_json(p, schedule));
      if (!steps.empty()) {
        nlohmann::json lr = nlohmann::json::array();
        for (auto s : steps) lr.push_back({{"step", s}, {"learning_rate", nahr::learning_rate(schedule, s)}});
        j["learning_rates"] = lr;
      }
      if (grid) j["grid"] = nlohmann::json::parse(nahr::grid_to_json(nahr::hyperparam_grid()));
      emit(j.dump(2));
      return 0;
    }
  } catch (const nahr::ValidationError& e) {
    std::cerr << "nahr: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "nahr: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
